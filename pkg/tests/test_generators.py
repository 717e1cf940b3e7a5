import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from netcontagion.generators import (
    PortfolioGenerationError,
    build_exposures,
    closed_form_diversification,
    cyclic_matrix,
    diversification,
    gen_er_network,
    gen_portfolios,
    gen_seed,
    interbank_weight,
    scale_epsilons,
    unit_diversification,
)


def diversification_loops(w):
    """Diversification written out as the triple sum, as an independent oracle."""
    n, m = len(w), len(w[0])
    total = 0.0
    for i in range(n):
        for l in range(n):
            if l != i:
                total += sum(abs(w[i][j] - w[l][j]) for j in range(m))
    return total / (2 * n * (n - 1))


class TestNetwork:
    def test_empty(self, rng):
        assert not gen_er_network(8, 0.0, rng).any()

    def test_complete(self, rng):
        adj = gen_er_network(8, 1.0, rng)
        assert adj.sum() == 8 * 7 and not np.diagonal(adj).any()

    def test_mean_link_count(self):
        rng = np.random.default_rng(2)
        counts = np.array([gen_er_network(10, 0.5, rng).sum() for _ in range(10_000)])
        se = math.sqrt(90 * 0.25 / 10_000)
        assert abs(counts.mean() - 45) <= 3 * se

    def test_out_degree_is_binomial(self):
        rng = np.random.default_rng(3)
        n, p = 10, 0.3
        deg = np.concatenate([gen_er_network(n, p, rng).sum(axis=1) for _ in range(1_000)])
        observed = np.bincount(deg, minlength=n)
        expected = stats.binom.pmf(np.arange(n), n - 1, p) * deg.size
        # pool sparse tail cells so every expected count is >= 5
        keep = expected >= 5
        obs = np.append(observed[keep], observed[~keep].sum())
        exp = np.append(expected[keep], expected[~keep].sum())
        assert stats.chisquare(obs, exp).pvalue > 0.01

    @pytest.mark.parametrize("p", [-0.1, 1.1])
    def test_bad_probability(self, rng, p):
        with pytest.raises(ValueError):
            gen_er_network(5, p, rng)


class TestInterbankWeight:
    @pytest.mark.parametrize("p,expected", [(0.0, 0.0), (1.0, 0.2), (0.5, 0.1)])
    def test_linear(self, p, expected):
        assert interbank_weight(p, 0.2) == pytest.approx(expected)

    def test_unknown_shape(self):
        with pytest.raises(ValueError):
            interbank_weight(0.5, 0.2, "sigmoid")


class TestBuildExposures:
    def test_two_borrowers(self):
        adj = np.zeros((3, 3), bool)
        adj[0, 1] = adj[0, 2] = True
        sys = build_exposures(adj, 0.1, 0.05, np.full((3, 3), 1 / 3))
        assert sys.L[0].tolist() == pytest.approx([0.0, 1.0, 1.0])
        assert sys.X[0].sum() == pytest.approx(18.0)

    def test_no_lending(self, rng):
        sys = build_exposures(gen_er_network(4, 1.0, rng), 0.0, 0.05, np.eye(4))
        assert not sys.L.any()
        np.testing.assert_allclose(sys.X.sum(axis=1), 20.0)

    def test_isolated_bank_invests_externally(self):
        adj = np.zeros((3, 3), bool)
        adj[1, 2] = True
        sys = build_exposures(adj, 0.1, 0.05, np.eye(3))
        assert not sys.L[0].any()
        assert sys.X[0].sum() == pytest.approx(20.0)

    def test_preserves_total_assets(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 9))
            p = rng.random()
            eta = rng.uniform(0.01, 0.3)
            adj = gen_er_network(n, p, rng)
            sys = build_exposures(adj, interbank_weight(p, 0.2), eta, rng.dirichlet(np.ones(n), size=n))
            assert sys.is_balanced(eta)

    def test_rejects_full_interbank(self, rng):
        with pytest.raises(ValueError):
            build_exposures(gen_er_network(3, 1.0, rng), 1.0, 0.05, np.eye(3))

    def test_rejects_non_stochastic_rows(self, rng):
        with pytest.raises(ValueError):
            build_exposures(gen_er_network(2, 1.0, rng), 0.1, 0.05, [[0.5, 0.4], [0.5, 0.5]])


class TestDiversification:
    def test_identical_rows(self):
        assert diversification(np.tile([0.2, 0.5, 0.3], (4, 1))) == 0.0

    def test_disjoint_rows(self):
        assert diversification(np.eye(5)) == pytest.approx(1.0)

    def test_two_banks(self):
        w = [[0.6, 0.4], [0.4, 0.6]]
        assert diversification_loops(w) == pytest.approx(0.2)
        assert diversification(w) == pytest.approx(0.2)

    def test_matches_loops(self, rng):
        for _ in range(30):
            w = rng.dirichlet(np.ones(4), size=int(rng.integers(2, 7)))
            assert diversification(w) == pytest.approx(diversification_loops(w.tolist()), abs=1e-14)

    def test_rejects_non_stochastic(self):
        with pytest.raises(ValueError):
            diversification([[0.5, 0.6], [0.5, 0.5]])


class TestSeed:
    def test_simplex(self, rng):
        for n in (2, 5, 10):
            s = gen_seed(n, rng)
            assert (s >= 0).all() and abs(s.sum() - 1) <= 1e-12

    def test_coordinate_means(self):
        rng = np.random.default_rng(8)
        n, draws = 6, 100_000
        s = np.array([gen_seed(n, rng) for _ in range(draws)])
        # uniform simplex coordinates are Beta(1, n-1)
        se = math.sqrt((n - 1) / (n * n * (n + 1)) / draws)
        assert np.abs(s.mean(axis=0) - 1 / n).max() <= 4 * se


class TestEpsilons:
    def test_two_asset_scaling(self):
        # eps2 = 0.1 gives rows (s1+.1, s2-.1), (s1-.1, s2+.1): D = 0.2
        assert unit_diversification([0.1]) == pytest.approx(0.2)
        assert scale_epsilons([0.1], 0.4) == pytest.approx([0.2])

    def test_zero_target(self):
        assert scale_epsilons([0.5, 0.3, 0.1], 0.0).tolist() == [0.0, 0.0, 0.0]

    def test_linearity(self, rng):
        raw = np.sort(rng.random(6))[::-1]
        np.testing.assert_allclose(scale_epsilons(raw, 0.6), 2 * scale_epsilons(raw, 0.3))

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            scale_epsilons([0.1, 0.3], 0.5)

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_closed_form_agrees_with_direct_evaluation(self, n, rng):
        for _ in range(20):
            eps = np.sort(rng.random(n - 1))[::-1] * 0.5 / n
            seed = np.full(n, 1.0 / n)
            direct = diversification_loops(cyclic_matrix(seed, eps).tolist())
            assert closed_form_diversification(eps) == pytest.approx(direct, abs=1e-9)

    def test_normalisation_discrepancy_is_factor_n(self):
        # substituting e1 = sum(eps) turns the closed form into
        # (2n-2) e2 + sum (2n-2-2i) e_{i+2} = D (n-1); writing D n (n-1) instead is off by n
        for n in (2, 3, 5, 8):
            eps = np.linspace(1.0, 0.2, n - 1)
            lhs = (2 * n - 2) * eps[0] + sum((2 * n - 2 - 2 * i) * eps[i] for i in range(1, n - 1))
            d = unit_diversification(eps)
            assert lhs == pytest.approx(d * (n - 1))
            # solving against n (n-1) yields a diversification n times too small
            assert lhs / (n * (n - 1)) == pytest.approx(d / n)
        # the n = 2 witness: D = e1 + e2 = 2 e2
        assert unit_diversification([0.25]) == pytest.approx(0.5)


class TestPortfolios:
    def test_zero_target_repeats_seed(self, rng):
        w = gen_portfolios(5, 0.0, rng)
        assert (w == w[0]).all() and abs(w[0].sum() - 1) < 1e-12

    def test_zero_spread_uses_equal_weights(self, rng):
        np.testing.assert_array_equal(gen_portfolios(4, 0.0, rng, seed_spread=0.0), np.full((4, 4), 0.25))

    def test_full_target_two_assets(self, rng):
        w = gen_portfolios(2, 1.0, rng)
        assert sorted(map(tuple, w)) == [(0.0, 1.0), (1.0, 0.0)]

    def test_cyclic_structure(self, rng):
        w = gen_portfolios(5, 0.4, rng, seed_spread=0.0)
        # row k is the seed plus a rotation of one perturbation vector, with + on column k
        pert = w - 0.2
        for k in range(5):
            np.testing.assert_allclose(np.roll(pert[0], k), pert[k], atol=1e-12)
            assert pert[k].argmax() == k
        tail = -pert[0, 1:]
        assert (np.diff(tail) <= 1e-12).all() and (tail >= -1e-12).all()
        assert pert[0, 0] == pytest.approx(tail.sum())

    @pytest.mark.parametrize("spread", [0.0, 0.5, 1.0])
    def test_hits_target(self, rng, spread):
        for n in (2, 3, 6, 10):
            for d in (0.05, 0.3, 0.7, 0.95):
                w = gen_portfolios(n, d, rng, seed_spread=spread)
                assert (w >= 0).all()
                assert np.abs(w.sum(axis=1) - 1).max() <= 1e-12
                assert abs(diversification(w) - d) <= 1e-9
                assert abs(diversification_loops(w.tolist()) - d) <= 1e-9

    def test_retry_exhaustion_reports_attempts(self, rng):
        with pytest.raises(PortfolioGenerationError) as info:
            gen_portfolios(10, 0.9, rng, max_retries=50, blend=False)
        assert info.value.attempts == 50

    def test_rejects_bad_input(self, rng):
        with pytest.raises(ValueError):
            gen_portfolios(1, 0.5, rng)
        with pytest.raises(ValueError):
            gen_portfolios(4, 1.2, rng)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_generated_matrices_are_valid(n, d, seed):
    w = gen_portfolios(n, d, np.random.default_rng(seed))
    assert (w >= 0).all()
    assert np.abs(w.sum(axis=1) - 1).max() <= 1e-12
    assert abs(diversification(w) - d) <= 1e-9

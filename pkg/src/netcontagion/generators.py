"""Random system construction.

Networks are directed Erdos-Renyi graphs. Each connected bank places a
fraction ``w`` of its assets in interbank loans, split equally across its
borrowers, and the rest in external assets according to a row of a
row-stochastic portfolio matrix.

Portfolio matrices with a prescribed diversification ``D`` follow a cyclic
perturbation scheme: every bank holds a common seed portfolio plus the
perturbation ``(e1, -e2, ..., -en)`` rotated so that ``+e1`` lands on the
bank's own asset, with ``e2 >= ... >= en >= 0`` and ``e1 = e2 + ... + en``.
``D`` is linear in the scale of the ``e`` vector, so the raw draw is rescaled
against a direct evaluation of :func:`diversification`.

An entry ``s_j - e_k`` is non-negative for every row iff ``min(s) >= e2``.
Drawing the seed and the raw perturbation shape as blends
``(1 - b) * random + b * uniform`` with ``b >= sqrt(D)`` makes this hold
surely: the scaled ``e2`` is at most ``D / (n b)`` while ``min(s) >= b / n``.
Rejection sampling starts with no blending and only moves ``b`` toward
``sqrt(D)`` after a round of rejections.
"""

from __future__ import annotations

import math

import numpy as np

from .model import ExposureSystem

__all__ = [
    "PortfolioGenerationError",
    "gen_er_network",
    "interbank_weight",
    "build_exposures",
    "diversification",
    "gen_seed",
    "cyclic_matrix",
    "scale_epsilons",
    "unit_diversification",
    "closed_form_diversification",
    "gen_portfolios",
]

WEIGHT_SHAPES = ("linear",)


class PortfolioGenerationError(RuntimeError):
    """No non-negative portfolio matrix was accepted within the retry budget."""

    def __init__(self, d_target: float, n: int, attempts: int):
        self.d_target = d_target
        self.n = n
        self.attempts = attempts
        super().__init__(
            f"no feasible portfolio matrix for n={n}, D={d_target} after {attempts} attempts"
        )


def gen_er_network(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Directed G(n, p) adjacency; ``adj[i, j]`` means bank i lends to bank j."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"link probability must lie in [0, 1], got {p}")
    adj = rng.random((n, n)) < p
    np.fill_diagonal(adj, False)
    return adj


def interbank_weight(p: float, w_max: float, shape: str = "linear") -> float:
    """Fraction of total assets lent interbank at connectivity ``p``."""
    if shape not in WEIGHT_SHAPES:
        raise ValueError(f"unsupported interbank weight shape {shape!r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"connectivity must lie in [0, 1], got {p}")
    return w_max * p


def build_exposures(adj, w: float, eta: float, portfolio_weights) -> ExposureSystem:
    """Turn a lending graph and portfolio weights into capital-buffer units.

    A bank with no borrowers keeps all ``1/eta`` buffers in external assets.
    """
    if not 0.0 <= w < 1.0:
        raise ValueError(f"interbank fraction must lie in [0, 1), got {w}")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    adj = np.asarray(adj, dtype=bool)
    weights = np.asarray(portfolio_weights, dtype=float)
    _check_stochastic(weights, tol=1e-12)
    n = adj.shape[0]
    if adj.shape != (n, n) or weights.shape[0] != n:
        raise ValueError("graph and portfolio matrix disagree on the number of banks")
    if np.diagonal(adj).any():
        raise ValueError("graph has self-loops")

    out_degree = adj.sum(axis=1)
    lends = out_degree > 0
    L = np.zeros((n, n))
    L[lends] = adj[lends] * ((w / eta) / out_degree[lends])[:, None]
    scale = np.where(lends, (1.0 - w) / eta, 1.0 / eta)
    return ExposureSystem(X=weights * scale[:, None], L=L)


def _check_stochastic(weights: np.ndarray, tol: float):
    if weights.ndim != 2:
        raise ValueError("portfolio matrix must be two-dimensional")
    if (weights < 0).any():
        raise ValueError("portfolio weights must be non-negative")
    bad = np.flatnonzero(np.abs(weights.sum(axis=1) - 1.0) > tol)
    if bad.size:
        raise ValueError(f"portfolio rows {bad.tolist()} do not sum to 1")


def diversification(portfolio_weights, tol: float = 1e-9) -> float:
    """Mean pairwise L1 distance between portfolios, halved.

    ``D = 1 / (2 N (N-1)) * sum_i sum_{l != i} sum_j |W_ij - W_lj|``; 0 for
    identical rows, 1 for disjoint ones.
    """
    w = np.asarray(portfolio_weights, dtype=float)
    _check_stochastic(w, tol=tol)
    n = w.shape[0]
    if n < 2:
        return 0.0
    total = np.abs(w[:, None, :] - w[None, :, :]).sum()
    return float(total / (2 * n * (n - 1)))


def gen_seed(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the probability simplex (normalised exponentials)."""
    if n < 2:
        raise ValueError("seed needs at least two assets")
    e = rng.standard_exponential(n)
    return e / e.sum()


def _rotation_index(n: int) -> np.ndarray:
    return (np.arange(n)[None, :] - np.arange(n)[:, None]) % n


def cyclic_matrix(seed, eps) -> np.ndarray:
    """Seed plus the rotated perturbation ``(sum(eps), -eps[0], ..., -eps[-1])``.

    Row ``k`` carries the positive entry on column ``k``.
    """
    seed = np.asarray(seed, dtype=float)
    eps = np.asarray(eps, dtype=float)
    n = seed.size
    if eps.size != n - 1:
        raise ValueError(f"need {n - 1} perturbations for {n} assets, got {eps.size}")
    pert = np.concatenate(([eps.sum()], -eps))
    return seed[None, :] + pert[_rotation_index(n)]


def scale_epsilons(raw, d_target: float) -> np.ndarray:
    """Rescale descending perturbations so the cyclic matrix has diversification ``d_target``.

    Accepts one vector of ``e2..en`` or a batch of shape ``(k, n-1)``.
    """
    raw = np.asarray(raw, dtype=float)
    if not 0.0 <= d_target <= 1.0:
        raise ValueError(f"target diversification must lie in [0, 1], got {d_target}")
    if (raw <= 0).any():
        raise ValueError("raw perturbations must be positive")
    if (np.diff(raw, axis=-1) > 0).any():
        raise ValueError("raw perturbations must be sorted in descending order")
    if d_target == 0.0:
        return np.zeros_like(raw)
    return raw * np.expand_dims(d_target / unit_diversification(raw), -1)


def unit_diversification(eps):
    """Diversification of the cyclic matrix built from ``eps`` (any seed).

    Rows ``k`` and ``l`` of a circulant differ by the perturbation minus its
    rotation by ``l - k``, so the pairwise sum collapses to ``n`` times the
    sum over shifts.
    """
    eps = np.asarray(eps, dtype=float)
    n = eps.shape[-1] + 1
    pert = np.concatenate((eps.sum(axis=-1, keepdims=True), -eps), axis=-1)
    shifts = np.arange(1, n)
    rolled = pert[..., (np.arange(n)[None, :] - shifts[:, None]) % n]
    total = n * np.abs(pert[..., None, :] - rolled).sum(axis=(-2, -1))
    return total / (2 * n * (n - 1))


def closed_form_diversification(eps) -> float:
    """Closed-form diversification of the cyclic matrix for descending ``eps``.

    ``eps`` holds ``e2..en``. Used as a cross-check of the scaling route.
    """
    eps = np.asarray(eps, dtype=float)
    n = eps.size + 1
    e1 = eps.sum()
    tail = sum((n - 1 - 2 * i) * eps[i] for i in range(1, n - 1))
    return float(n * ((n - 1) * (e1 + eps[0]) + tail) / (n * (n - 1)))


def gen_portfolios(
    n: int,
    d_target: float,
    rng: np.random.Generator,
    max_retries: int = 10_000,
    blend: bool = True,
    rounds: int = 8,
    round_cap: int = 256,
    seed_spread: float = 1.0,
) -> np.ndarray:
    """Random ``n x n`` row-stochastic matrix with diversification ``d_target``.

    Candidates failing non-negativity are redrawn. With ``blend`` on, the
    retry budget is split into ``rounds`` rounds whose blend factor rises
    linearly from 0 to ``sqrt(d_target)``; the final round cannot reject.
    Non-final rounds try at most ``round_cap`` candidates.

    ``seed_spread`` mixes the random simplex seed with the equal-weight
    portfolio: 1 keeps the pure simplex draw, 0 always starts from equal
    weights.
    """
    if n < 2:
        raise ValueError("portfolio generation needs n >= 2")
    if not 0.0 <= d_target <= 1.0:
        raise ValueError(f"target diversification must lie in [0, 1], got {d_target}")
    if max_retries < 1:
        raise ValueError("max_retries must be positive")
    if not 0.0 <= seed_spread <= 1.0:
        raise ValueError(f"seed_spread must lie in [0, 1], got {seed_spread}")

    uniform = np.full(n, 1.0 / n)
    if d_target == 0.0:
        if seed_spread == 0.0:
            return np.tile(uniform, (n, 1))
        return np.tile((1.0 - seed_spread) * uniform + seed_spread * gen_seed(n, rng), (n, 1))

    b_max = math.sqrt(d_target) if blend else 0.0
    n_rounds = max(1, min(rounds, max_retries)) if blend else 1
    per_round = [min(max_retries // n_rounds, round_cap)] * (n_rounds - 1)
    per_round.append(max_retries - sum(per_round))
    attempts = 0
    for r, budget in enumerate(per_round):
        b = b_max * r / (n_rounds - 1) if n_rounds > 1 else b_max
        batch = 8
        while budget > 0:
            k = min(batch, budget)
            seeds = rng.standard_exponential((k, n))
            seeds = seed_spread * seeds / seeds.sum(axis=1, keepdims=True) + (1.0 - seed_spread) * uniform
            seeds = (1.0 - b) * seeds + b * uniform
            raw = (1.0 - b) * rng.random((k, n - 1)) + b
            # random() can return exactly 0
            raw = -np.sort(-np.maximum(raw, np.finfo(float).tiny), axis=1)
            eps = scale_epsilons(raw, d_target)
            ok = np.flatnonzero(eps[:, 0] <= seeds.min(axis=1) + 1e-12)
            if ok.size:
                attempts += int(ok[0]) + 1
                out = cyclic_matrix(seeds[ok[0]], eps[ok[0]])
                # clip round-off negatives, then restore exact row sums
                out = np.maximum(out, 0.0)
                return out / out.sum(axis=1, keepdims=True)
            attempts += k
            budget -= k
            batch *= 2
    raise PortfolioGenerationError(d_target, n, attempts)

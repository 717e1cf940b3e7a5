"""Quick invariant checks behind the ``validate`` command.

Each check is cheap (seconds in total) and independent of the configured
sweep size; model parameters come from the run configuration.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .distributions import make_loss_model, t_cdf, t_quantile
from .generators import build_exposures, diversification, gen_er_network, gen_portfolios, interbank_weight
from .model import ExposureSystem, cascade_gfp, cascade_lfp, step
from .partition import census, multi_behavior_bound

__all__ = ["CheckResult", "run_checks", "enumerate_fixed_points"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def enumerate_fixed_points(sys: ExposureSystem, v) -> list[tuple[bool, ...]]:
    """All states ``f`` with ``step(f) == f``, by brute force over ``2**N`` states."""
    states = np.array(list(itertools.product((False, True), repeat=sys.n_banks)))
    nxt = step(sys, np.broadcast_to(v, (len(states), sys.n_assets)), states)
    return [tuple(s) for s, t in zip(states, nxt) if np.array_equal(s, t)]


def _random_system(rng, n, m, link_p=0.6):
    X = rng.uniform(0, 3, (n, m)) * (rng.random((n, m)) < 0.8)
    L = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < link_p)
    np.fill_diagonal(L, 0.0)
    return ExposureSystem(X, L)


def check_cascade_oracle(cfg: RunConfig, rng) -> str:
    for _ in range(300):
        n = int(rng.integers(2, 5))
        sys = _random_system(rng, n, n)
        v = rng.uniform(-0.3, 0.8, n)
        fps = enumerate_fixed_points(sys, v)
        lo, hi = tuple(cascade_lfp(sys, v)), tuple(cascade_gfp(sys, v))
        meet = tuple(all(c) for c in zip(*fps))
        join = tuple(any(c) for c in zip(*fps))
        if lo not in fps or hi not in fps or lo != meet or hi != join:
            raise AssertionError(f"cascade disagrees with enumeration for v={v}")
    return "300 instances"


def check_generator(cfg: RunConfig, rng) -> str:
    n = max(2, min(cfg.n_banks, 10))
    for d in (0.0, 0.3, 0.6, 0.9):
        for _ in range(10):
            w = gen_portfolios(n, d, rng, max_retries=cfg.max_retries, seed_spread=cfg.seed_spread)
            if (w < 0).any() or np.abs(w.sum(axis=1) - 1).max() > 1e-12:
                raise AssertionError("portfolio matrix is not row-stochastic")
            if abs(diversification(w) - d) > 1e-9:
                raise AssertionError(f"diversification {diversification(w)} != {d}")
    return f"n={n}"


def check_balance(cfg: RunConfig, rng) -> str:
    n = cfg.n_banks
    for p in (0.0, 0.3, 1.0):
        adj = gen_er_network(n, p, rng)
        w = gen_portfolios(n, 0.4, rng, seed_spread=cfg.seed_spread) if n >= 2 else np.ones((1, 1))
        sys = build_exposures(adj, interbank_weight(p, cfg.w_max, cfg.weight_shape), cfg.eta, w)
        if not sys.is_balanced(cfg.eta):
            raise AssertionError("asset side does not total 1/eta")
    return "row sums equal 1/eta"


def check_calibration(cfg: RunConfig, rng) -> str:
    draws = 200_000
    for law in ("t", "normal"):
        model = make_loss_model(law, cfg.q, cfg.eta, cfg.df)
        hit = np.mean(model.sample(rng, draws) >= cfg.eta)
        se = math.sqrt(cfg.q * (1 - cfg.q) / draws)
        if abs(hit - cfg.q) > 4 * se:
            raise AssertionError(f"{law}: P(loss >= eta) = {hit}, expected {cfg.q}")
    return f"{draws} draws per law"


def check_quantile_roundtrip(cfg: RunConfig, rng) -> str:
    for p in (0.001, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999):
        err = abs(t_cdf(t_quantile(p, cfg.df), cfg.df) - p)
        if err > 1e-9:
            raise AssertionError(f"t_cdf(t_quantile({p})) off by {err}")
    return f"df={cfg.df}"


def check_multi_bound(cfg: RunConfig, rng) -> str:
    worst = 0
    for _ in range(10):
        sys = _random_system(rng, 3, 3, link_p=0.8)
        c = census(sys, bounds=(-0.5, 1.0), resolution=24)
        worst = max(worst, c.n_multi)
        if c.n_multi > multi_behavior_bound(3) or len(c.signatures) > 2**6:
            raise AssertionError(f"{c.n_multi} multiple-behavior regions exceed the bound")
    return f"max {worst} <= {multi_behavior_bound(3)}"


CHECKS: list[tuple[str, Callable]] = [
    ("cascade matches fixed-point enumeration", check_cascade_oracle),
    ("portfolio generator hits target diversification", check_generator),
    ("exposures total 1/eta per bank", check_balance),
    ("loss law calibrated to q", check_calibration),
    ("t quantile inverts t cdf", check_quantile_roundtrip),
    ("multiple-behavior count within bound", check_multi_bound),
]


def run_checks(cfg: RunConfig, seed: int = 0) -> list[CheckResult]:
    results = []
    for i, (name, fn) in enumerate(CHECKS):
        rng = np.random.default_rng([seed, i])
        try:
            results.append(CheckResult(name, True, fn(cfg, rng)))
        except Exception as exc:  # report every failing check, not just the first
            results.append(CheckResult(name, False, str(exc)))
    return results

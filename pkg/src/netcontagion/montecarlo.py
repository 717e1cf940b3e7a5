"""Expected systemic cost and the connectivity/diversification sweep.

For one system, the expected cost ``E[K^S]`` is estimated by averaging
``K(V)^S`` over i.i.d. loss vectors, where ``K(V)`` counts failures in the
least fixed point (every bank starts solvent). A sweep averages that estimate
over random systems for every ``(p, d)`` grid cell.

Every trial draws from its own streams, keyed by ``(master_seed, p index,
d index, trial, role)``, so results do not depend on scheduling or on the
number of worker threads.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import LossModel, make_loss_model
from .generators import (
    PortfolioGenerationError,
    build_exposures,
    gen_er_network,
    gen_portfolios,
    interbank_weight,
)
from .model import ExposureSystem, ModelParams, cascade_gfp, cascade_lfp, failure_count

__all__ = [
    "ROLES",
    "SweepConfig",
    "SweepRow",
    "SweepTable",
    "CostEstimate",
    "SweepCellError",
    "derive_seed",
    "derive_stream",
    "expected_cost",
    "run_trial",
    "sweep",
    "find_d_opt",
    "d_opt_table",
    "non_optimum_band",
]

_MASK64 = (1 << 64) - 1
ROLES = {"network": 1, "portfolio": 2, "losses": 3}


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, p_index: int, d_index: int, trial_index: int, role: str) -> int:
    """64-bit key for one (cell, trial, role), by chained SplitMix64 avalanche."""
    try:
        role_code = ROLES[role]
    except KeyError:
        raise ValueError(f"unknown stream role {role!r}") from None
    h = _splitmix64(master_seed & _MASK64)
    for part in (p_index, d_index, trial_index, role_code):
        if part < 0:
            raise ValueError("stream indices must be non-negative")
        h = _splitmix64(h ^ (part & _MASK64))
    return h


def derive_stream(master_seed: int, p_index: int, d_index: int, trial_index: int, role: str) -> np.random.Generator:
    """Independent, reproducible generator backed by the counter-based Philox."""
    key = derive_seed(master_seed, p_index, d_index, trial_index, role)
    return np.random.Generator(np.random.Philox(key=[key, _splitmix64(key)]))


@dataclass(frozen=True)
class SweepConfig:
    p_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    d_grid: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(11))
    n_trials: int = 100
    n_samples: int = 2000
    master_seed: int = 20240101
    params: ModelParams = field(default_factory=ModelParams)
    loss_law: str = "t"
    max_retries: int = 10_000
    seed_spread: float = 0.0

    def __post_init__(self):
        for name in ("p_grid", "d_grid"):
            grid = tuple(float(x) for x in getattr(self, name))
            if not grid:
                raise ValueError(f"{name} must not be empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be strictly increasing")
            if grid[0] < 0.0 or grid[-1] > 1.0:
                raise ValueError(f"{name} values must lie in [0, 1]")
            object.__setattr__(self, name, grid)
        if self.n_trials < 1 or self.n_samples < 1:
            raise ValueError("n_trials and n_samples must be at least 1")
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if not 0.0 <= self.seed_spread <= 1.0:
            raise ValueError("seed_spread must lie in [0, 1]")
        if self.params.n_assets != self.params.n_banks:
            raise ValueError("portfolio generation requires n_assets == n_banks")

    @property
    def s_list(self) -> tuple[float, ...]:
        return self.params.s_list

    def loss_model(self) -> LossModel:
        p = self.params
        return make_loss_model(self.loss_law, q=p.q, eta=p.eta, df=p.df)


@dataclass(frozen=True)
class SweepRow:
    p: float
    d: float
    s: float
    mean_cost: float
    std_err: float
    multi_rate: float
    n_trials: int
    n_samples: int


@dataclass
class SweepTable:
    rows: list[SweepRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def sorted(self) -> SweepTable:
        return SweepTable(sorted(self.rows, key=lambda r: (r.p, r.d, r.s)))

    def slice(self, p: float, s: float) -> list[SweepRow]:
        """Rows at connectivity ``p`` and exponent ``s``, ordered by ``d``."""
        out = [r for r in self.rows if math.isclose(r.p, p, abs_tol=1e-12) and math.isclose(r.s, s, abs_tol=1e-12)]
        return sorted(out, key=lambda r: r.d)

    def cell(self, p: float, d: float, s: float) -> SweepRow:
        for r in self.slice(p, s):
            if math.isclose(r.d, d, abs_tol=1e-12):
                return r
        raise KeyError(f"no row at p={p}, d={d}, s={s}")

    def values(self, attr: str) -> list:
        return sorted({getattr(r, attr) for r in self.rows})


@dataclass(frozen=True)
class CostEstimate:
    costs: np.ndarray  # one entry per exponent
    multi_rate: float
    counts: np.ndarray = field(repr=False)


class SweepCellError(RuntimeError):
    """A trial in a sweep cell could not be generated."""

    def __init__(self, p: float, d: float, trial: int, cause: Exception):
        self.p, self.d, self.trial = p, d, trial
        super().__init__(f"sweep cell p={p}, d={d}, trial {trial}: {cause}")


def expected_cost(
    sys: ExposureSystem,
    model: LossModel,
    n_samples: int,
    s_list: Sequence[float],
    rng: np.random.Generator,
    with_multi: bool = True,
) -> CostEstimate:
    """Monte Carlo estimate of ``E[K^S]`` for every ``S`` in ``s_list``.

    Also reports how often the least and greatest fixed points disagree.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if any(s < 1 for s in s_list):
        raise ValueError("cost exponents must be >= 1")
    v = model.sample(rng, (n_samples, sys.n_assets))
    lfp = cascade_lfp(sys, v)
    k = failure_count(lfp)
    kf = k.astype(float)
    costs = np.array([np.mean(kf**s) for s in s_list])
    multi = 0.0
    if with_multi:
        gfp = cascade_gfp(sys, v)
        multi = float(np.mean((lfp != gfp).any(axis=1)))
    return CostEstimate(costs=costs, multi_rate=multi, counts=k)


def build_trial_system(cfg: SweepConfig, p_index: int, d_index: int, trial: int) -> ExposureSystem:
    """Random exposure system for one trial of one sweep cell."""
    prm = cfg.params
    p, d = cfg.p_grid[p_index], cfg.d_grid[d_index]
    adj = gen_er_network(prm.n_banks, p, derive_stream(cfg.master_seed, p_index, d_index, trial, "network"))
    w = interbank_weight(p, prm.w_max, prm.weight_shape)
    weights = gen_portfolios(
        prm.n_banks, d, derive_stream(cfg.master_seed, p_index, d_index, trial, "portfolio"),
        max_retries=cfg.max_retries, seed_spread=cfg.seed_spread,
    )
    return build_exposures(adj, w, prm.eta, weights)


def run_trial(cfg: SweepConfig, p_index: int, d_index: int, trial: int, model: LossModel | None = None) -> CostEstimate:
    model = cfg.loss_model() if model is None else model
    try:
        sys = build_trial_system(cfg, p_index, d_index, trial)
    except PortfolioGenerationError as exc:
        raise SweepCellError(cfg.p_grid[p_index], cfg.d_grid[d_index], trial, exc) from exc
    rng = derive_stream(cfg.master_seed, p_index, d_index, trial, "losses")
    return expected_cost(sys, model, cfg.n_samples, cfg.s_list, rng)


def _run_cell(cfg: SweepConfig, model: LossModel, p_index: int, d_index: int) -> list[SweepRow]:
    n_s = len(cfg.s_list)
    costs = np.empty((cfg.n_trials, n_s))
    multi = np.empty(cfg.n_trials)
    for t in range(cfg.n_trials):
        est = run_trial(cfg, p_index, d_index, t, model)
        costs[t] = est.costs
        multi[t] = est.multi_rate
    mean = costs.mean(axis=0)
    if cfg.n_trials > 1:
        se = costs.std(axis=0, ddof=1) / math.sqrt(cfg.n_trials)
    else:
        se = np.zeros(n_s)
    p, d = cfg.p_grid[p_index], cfg.d_grid[d_index]
    return [
        SweepRow(p, d, s, float(mean[i]), float(se[i]), float(multi.mean()), cfg.n_trials, cfg.n_samples)
        for i, s in enumerate(cfg.s_list)
    ]


def sweep(cfg: SweepConfig, workers: int = 1) -> SweepTable:
    """Average expected cost over random systems for every ``(p, d, s)``.

    ``workers > 1`` evaluates cells on a thread pool; the table is identical
    to the single-threaded one.
    """
    model = cfg.loss_model()
    cells = [(i, j) for i in range(len(cfg.p_grid)) for j in range(len(cfg.d_grid))]
    if workers <= 1:
        results = [_run_cell(cfg, model, i, j) for i, j in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _run_cell(cfg, model, *c), cells))
    return SweepTable([row for cell in results for row in cell]).sorted()


def find_d_opt(table: SweepTable, p: float, s: float) -> float:
    """Diversification with the lowest mean cost; ties go to the smaller ``d``."""
    rows = table.slice(p, s)
    if not rows:
        raise KeyError(f"no rows for p={p}, s={s}")
    best = rows[0]
    for r in rows[1:]:
        if r.mean_cost < best.mean_cost:
            best = r
    return best.d


def d_opt_table(table: SweepTable) -> list[tuple[float, float, float]]:
    """``(p, s, D_opt)`` for every slice of the table."""
    return [(p, s, find_d_opt(table, p, s)) for p in table.values("p") for s in table.values("s")]


def non_optimum_band(table: SweepTable, p: float) -> list[float]:
    """Grid values of ``d`` skipped by the jump of ``D_opt`` at connectivity ``p``.

    These are the ``d`` strictly between 0 and the smallest positive optimum
    over all exponents in the table; none of them is optimal for any exponent.
    Empty when every optimum is 0.
    """
    opts = [find_d_opt(table, p, s) for s in table.values("s")]
    positive = [d for d in opts if d > 0]
    if not positive:
        return []
    upper = min(positive)
    ds = sorted({r.d for r in table.rows if math.isclose(r.p, p, abs_tol=1e-12)})
    return [d for d in ds if 0 < d < upper and d not in opts]

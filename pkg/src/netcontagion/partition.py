"""Small-N analysis of how loss space splits into failure regions.

Each loss vector maps to a :class:`RegionSignature`, the pair of least and
greatest fixed points. Where they differ, the outcome depends on how the
system is initialised (a multiple-behavior region). Regions are explored by
classifying a regular grid of loss vectors.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .model import ExposureSystem, RegionSignature, cascade_gfp, cascade_lfp

__all__ = [
    "RegionCensus",
    "BoundarySegment",
    "BudgetExceeded",
    "classify_region",
    "classify_batch",
    "census",
    "multi_behavior_bound",
    "find_all_fail_witness",
    "boundary_segments",
    "failure_contexts",
]

DEFAULT_BOUNDS = (-0.5, 1.0)
DEFAULT_BUDGET = 50_000_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class RegionCensus:
    counts: Counter = field(default_factory=Counter)  # RegionSignature -> grid points
    bounds: tuple[tuple[float, float], ...] = ()
    resolution: int = 0

    @property
    def signatures(self) -> set[RegionSignature]:
        return set(self.counts)

    @property
    def n_multi(self) -> int:
        return sum(1 for s in self.counts if s.is_multi)

    @property
    def n_lfp(self) -> int:
        return len({s.lfp for s in self.counts})


@dataclass(frozen=True)
class BoundarySegment:
    """Line ``X[i] . v = 1 - (L f)[i]`` clipped to a rectangle (two assets only).

    ``endpoints`` is empty when the bank has no external exposure or the line
    misses the rectangle.
    """

    bank: int
    context: tuple[bool, ...]
    normal: tuple[float, float]
    offset: float
    endpoints: tuple[tuple[float, float], ...]

    @property
    def degenerate(self) -> bool:
        return self.normal == (0.0, 0.0)


def _as_tuple(f) -> tuple[bool, ...]:
    return tuple(bool(x) for x in f)


def classify_region(sys: ExposureSystem, v) -> RegionSignature:
    """Signature of the region containing loss vector ``v``."""
    v = np.asarray(v, dtype=float)
    return RegionSignature(_as_tuple(cascade_lfp(sys, v)), _as_tuple(cascade_gfp(sys, v)))


def classify_batch(sys: ExposureSystem, v) -> tuple[np.ndarray, np.ndarray]:
    """Least and greatest fixed points for a ``(k, M)`` batch of loss vectors."""
    v = np.asarray(v, dtype=float)
    return cascade_lfp(sys, v), cascade_gfp(sys, v)


def _normalise_bounds(bounds, m: int) -> tuple[tuple[float, float], ...]:
    if bounds is None:
        bounds = DEFAULT_BOUNDS
    bounds = np.asarray(bounds, dtype=float)
    if bounds.shape == (2,):
        bounds = np.tile(bounds, (m, 1))
    if bounds.shape != (m, 2) or (bounds[:, 1] <= bounds[:, 0]).any():
        raise ValueError(f"bounds must be one (lo, hi) pair or {m} of them with lo < hi")
    return tuple((float(lo), float(hi)) for lo, hi in bounds)


def grid_points(bounds, resolution: int) -> np.ndarray:
    """Regular grid with ``resolution`` points per axis, endpoints included."""
    axes = [np.linspace(lo, hi, resolution) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def census(sys: ExposureSystem, bounds=None, resolution: int = 400, budget: int = DEFAULT_BUDGET,
           chunk: int = 200_000) -> RegionCensus:
    """Tally region signatures over a grid on ``bounds``.

    Work is estimated as ``2**N * resolution**M``; larger requests raise
    :class:`BudgetExceeded`.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    m, n = sys.n_assets, sys.n_banks
    bounds = _normalise_bounds(bounds, m)
    n_points = resolution**m
    if n_points * 2**n > budget:
        raise BudgetExceeded(f"census of {n_points} points for {n} banks exceeds budget {budget}")
    pts = grid_points(bounds, resolution)
    weights = 1 << np.arange(n)
    counts: Counter = Counter()
    for start in range(0, len(pts), chunk):
        lfp, gfp = classify_batch(sys, pts[start:start + chunk])
        codes = (lfp @ weights) * (1 << n) + gfp @ weights
        for code, c in zip(*np.unique(codes, return_counts=True)):
            counts[int(code)] += int(c)
    out = Counter()
    for code, c in counts.items():
        lo, hi = divmod(code, 1 << n)
        out[RegionSignature(_bits(lo, n), _bits(hi, n))] = c
    return RegionCensus(out, bounds, resolution)


def _bits(code: int, n: int) -> tuple[bool, ...]:
    return tuple(bool(code >> i & 1) for i in range(n))


def multi_behavior_bound(n: int) -> int:
    """Upper bound ``sum_{i=2}^{n} C(n, i) 2^(n-i)`` on multiple-behavior regions."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return sum(math.comb(n, i) * 2 ** (n - i) for i in range(2, n + 1))


def _simplex_directions(m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        a = np.linspace(0.0, 1.0, count)
        dirs = np.stack([a, 1.0 - a], axis=1)
    else:
        dirs = rng.dirichlet(np.ones(m), size=count - 1)
        dirs = np.vstack([np.full(m, 1.0 / m), dirs])
    return dirs


def find_all_fail_witness(sys: ExposureSystem, n_directions: int = 64, n_steps: int = 256,
                          rng: np.random.Generator | None = None) -> np.ndarray | None:
    """Search rays ``t * u`` (``u`` on the simplex) for an all-solvent/all-failed point.

    Returns a loss vector where the least fixed point has no failures and the
    greatest has every bank failed, or ``None`` if the search finds none.
    ``t`` runs up to the largest value keeping every loss at most 1.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n = sys.n_banks
    for u in _simplex_directions(sys.n_assets, n_directions, rng):
        t_max = 1.0 / u.max()
        t = np.linspace(t_max / n_steps, t_max, n_steps)
        v = t[:, None] * u[None, :]
        lfp, gfp = classify_batch(sys, v)
        hit = np.flatnonzero(~lfp.any(axis=1) & gfp.all(axis=1))
        if hit.size and n > 0:
            return v[hit[0]]
    return None


def failure_contexts(n: int):
    """Every failure set of ``n`` banks, as boolean tuples."""
    return (tuple(bool(b) for b in bits) for bits in itertools.product((0, 1), repeat=n))


def _clip_line(a: float, b: float, c: float, box) -> tuple[tuple[float, float], ...]:
    # intersect a*x + b*y = c with the rectangle
    (x0, x1), (y0, y1) = box
    pts = []
    if b != 0.0:
        for x in (x0, x1):
            y = (c - a * x) / b
            if y0 - 1e-12 <= y <= y1 + 1e-12:
                pts.append((x, y))
    if a != 0.0:
        for y in (y0, y1):
            x = (c - b * y) / a
            if x0 - 1e-12 <= x <= x1 + 1e-12:
                pts.append((x, y))
    uniq = []
    for p in pts:
        if not any(abs(p[0] - q[0]) < 1e-12 and abs(p[1] - q[1]) < 1e-12 for q in uniq):
            uniq.append(p)
    return tuple(sorted(uniq)[:2]) if len(uniq) >= 2 else ()


def boundary_segments(sys: ExposureSystem, f_context=None, bounds=None) -> list[BoundarySegment]:
    """Failure boundary of every bank, shifted by the losses from ``f_context``.

    With ``f_context=None`` every failure set is enumerated. Two assets only.
    """
    if sys.n_assets != 2:
        raise ValueError(f"boundary segments need exactly 2 assets, system has {sys.n_assets}")
    box = _normalise_bounds(bounds, 2)
    contexts = failure_contexts(sys.n_banks) if f_context is None else [_as_tuple(f_context)]
    out = []
    for ctx in contexts:
        if len(ctx) != sys.n_banks:
            raise ValueError("failure context length does not match the number of banks")
        shift = sys.L @ np.asarray(ctx, dtype=float)
        for i in range(sys.n_banks):
            a, b = (float(x) for x in sys.X[i])
            c = 1.0 - float(shift[i])
            ends = () if a == 0.0 and b == 0.0 else _clip_line(a, b, c, box)
            out.append(BoundarySegment(i, ctx, (a, b), c, ends))
    return out

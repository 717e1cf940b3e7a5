"""Balance-sheet model and the failure fixed-point solver.

Bank ``i`` loses ``Y_i = sum_j X[i, j] v[j] + sum_j L[i, j] f[j]`` capital
buffers, and fails when ``Y_i >= 1``. Failure only ever adds losses, so the
update map is monotone and the iteration started from all-solvent
(all-failed) converges to the least (greatest) fixed point in at most
``N + 1`` steps.

All solvers accept a single loss vector of shape ``(M,)`` or a batch of shape
``(k, M)``; the returned states have the matching leading shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "ExposureSystem",
    "RegionSignature",
    "asset_losses",
    "step",
    "iterate_to_fixed_point",
    "cascade_lfp",
    "cascade_gfp",
    "failure_count",
    "cost",
]


@dataclass(frozen=True)
class ModelParams:
    """Scalar knobs shared by every simulation."""

    n_banks: int = 10
    n_assets: int = 10
    eta: float = 0.05
    q: float = 0.05
    w_max: float = 0.2
    weight_shape: str = "linear"
    df: float = 1.5
    s_list: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)

    def __post_init__(self):
        if self.n_banks < 1 or self.n_assets < 1:
            raise ValueError("n_banks and n_assets must be positive")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if not 0.0 < self.q < 0.5:
            raise ValueError(f"q must lie in (0, 0.5), got {self.q}")
        if not 0.0 <= self.w_max < 1.0:
            raise ValueError(f"w_max must lie in [0, 1), got {self.w_max}")
        if self.weight_shape != "linear":
            raise ValueError(f"unsupported weight_shape {self.weight_shape!r}")
        if not self.df > 0:
            raise ValueError(f"df must be positive, got {self.df}")
        if not self.s_list or any(s < 1 for s in self.s_list):
            raise ValueError("s_list must be non-empty with every exponent >= 1")
        object.__setattr__(self, "s_list", tuple(float(s) for s in self.s_list))


@dataclass(frozen=True)
class ExposureSystem:
    """External holdings ``X`` (N x M) and interbank loans ``L`` (N x N).

    Both are expressed in units of the lending bank's capital buffer.
    """

    X: np.ndarray
    L: np.ndarray
    _XT: np.ndarray = field(init=False, repr=False, compare=False)
    _LT: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float, ndmin=2)
        L = np.array(self.L, dtype=float, ndmin=2)
        n = X.shape[0]
        if X.ndim != 2 or L.shape != (n, n):
            raise ValueError(f"L must be {n}x{n} to match X with {n} rows, got {L.shape}")
        if (X < 0).any() or (L < 0).any():
            raise ValueError("exposures must be non-negative")
        if np.diagonal(L).any():
            raise ValueError("a bank cannot lend to itself: L must have a zero diagonal")
        X.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "_XT", np.ascontiguousarray(X.T))
        object.__setattr__(self, "_LT", np.ascontiguousarray(L.T))

    @property
    def n_banks(self) -> int:
        return self.X.shape[0]

    @property
    def n_assets(self) -> int:
        return self.X.shape[1]

    def total_assets(self) -> np.ndarray:
        """Per-bank asset side, in capital buffers."""
        return self.X.sum(axis=1) + self.L.sum(axis=1)

    def is_balanced(self, eta: float, atol: float = 1e-9) -> bool:
        """True when every bank's assets total ``1/eta`` capital buffers."""
        return bool(np.allclose(self.total_assets(), 1.0 / eta, rtol=0.0, atol=atol))


@dataclass(frozen=True)
class RegionSignature:
    """Least and greatest fixed point at one loss vector."""

    lfp: tuple[bool, ...]
    gfp: tuple[bool, ...]

    @property
    def is_multi(self) -> bool:
        return self.lfp != self.gfp

    def label(self) -> str:
        bits = lambda f: "".join("1" if x else "0" for x in f)  # noqa: E731
        return f"{bits(self.lfp)}/{bits(self.gfp)}"


def _check_dims(sys: ExposureSystem, v: np.ndarray, f: np.ndarray | None = None):
    if v.shape[-1] != sys.n_assets:
        raise ValueError(f"loss vector has {v.shape[-1]} entries, system has {sys.n_assets} assets")
    if f is not None and f.shape[-1] != sys.n_banks:
        raise ValueError(f"state has {f.shape[-1]} entries, system has {sys.n_banks} banks")


def asset_losses(sys: ExposureSystem, v, f) -> np.ndarray:
    """Return ``Y = X v + L f`` for one state or a batch of states."""
    v = np.asarray(v, dtype=float)
    f = np.asarray(f)
    _check_dims(sys, v, f)
    return v @ sys._XT + f.astype(float) @ sys._LT


def step(sys: ExposureSystem, v, f) -> np.ndarray:
    """One application of the failure map ``f -> I(Y >= 1)``."""
    return asset_losses(sys, v, f) >= 1.0


def iterate_to_fixed_point(sys: ExposureSystem, v, f0) -> tuple[np.ndarray, int]:
    """Iterate :func:`step` from ``f0`` until no entry changes.

    Returns the fixed point and the number of map evaluations performed. The
    external part of the loss is computed once.
    """
    v = np.asarray(v, dtype=float)
    f = np.array(f0, dtype=bool)
    _check_dims(sys, v, f)
    external = v @ sys._XT
    f = np.broadcast_to(f, external.shape).copy()
    n_iter = 0
    # a monotone map on {0,1}^N started from an extreme point needs <= N+1 steps
    for _ in range(sys.n_banks + 1):
        new = external + f.astype(float) @ sys._LT >= 1.0
        n_iter += 1
        if np.array_equal(new, f):
            break
        f = new
    else:
        raise RuntimeError("failure map did not converge; is the start an extreme state?")
    return f, n_iter


def cascade_lfp(sys: ExposureSystem, v) -> np.ndarray:
    """Final state when every bank starts solvent (least fixed point)."""
    v = np.asarray(v, dtype=float)
    f0 = np.zeros(v.shape[:-1] + (sys.n_banks,), dtype=bool)
    return iterate_to_fixed_point(sys, v, f0)[0]


def cascade_gfp(sys: ExposureSystem, v) -> np.ndarray:
    """Final state when every bank starts failed (greatest fixed point)."""
    v = np.asarray(v, dtype=float)
    f0 = np.ones(v.shape[:-1] + (sys.n_banks,), dtype=bool)
    return iterate_to_fixed_point(sys, v, f0)[0]


def failure_count(f) -> int | np.ndarray:
    """Number of failed banks; vectorised over leading axes."""
    k = np.count_nonzero(np.asarray(f, dtype=bool), axis=-1)
    return int(k) if np.ndim(k) == 0 else k


def cost(k, s: float):
    """Social cost ``K**S`` of ``K`` simultaneous failures."""
    if s < 1:
        raise ValueError(f"cost exponent must be >= 1, got {s}")
    k = np.asarray(k, dtype=float)
    if (k < 0).any():
        raise ValueError("failure count must be non-negative")
    out = k**s
    return float(out) if out.ndim == 0 else out

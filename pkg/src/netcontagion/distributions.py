"""Asset-loss law: Student-t machinery, scale calibration and sampling.

Log returns are ``T / alpha`` with ``T`` a standard Student-t variate, so an
asset's fractional loss is ``1 - exp(T / alpha)``. ``alpha`` is chosen such
that a bank holding a single asset (``1/eta`` capital buffers of it) fails
with probability ``q``::

    P(1 - exp(T/alpha) >= eta) = P(T <= alpha * ln(1 - eta)) = q
    => alpha = t_quantile(q) / ln(1 - eta)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

__all__ = [
    "regularized_incomplete_beta",
    "t_cdf",
    "t_quantile",
    "calibrate_alpha",
    "sample_gamma",
    "sample_t",
    "LossModel",
    "NormalLossModel",
    "sample_losses",
    "make_loss_model",
]

_EPS = 1e-16
_TINY = 1e-300
_MAX_CF_ITER = 500
_MAX_LOSS = np.nextafter(1.0, 0.0)
_MIN_LOSS = -1e300


def _beta_cf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_CF_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """``I_x(a, b)`` for ``a, b > 0`` and ``0 <= x <= 1``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # the fraction converges fast only on one side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def t_cdf(x: float, df: float) -> float:
    """CDF of the Student-t distribution with ``df`` degrees of freedom."""
    if not df > 0:
        raise ValueError(f"df must be positive, got {df}")
    if math.isnan(x):
        return math.nan
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    if x == 0.0:
        return 0.5
    # tail = P(T > |x|) = I_{df/(df+x^2)}(df/2, 1/2) / 2
    x2 = x * x
    if x2 < df:
        # direct form loses precision near 0; use the complementary argument
        z = x2 / (df + x2)
        tail = 0.5 * (1.0 - regularized_incomplete_beta(0.5, df / 2.0, z))
    else:
        z = df / (df + x2)
        tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, z)
    return 1.0 - tail if x > 0 else tail


def t_quantile(p: float, df: float, tol: float = 1e-10) -> float:
    """Inverse of :func:`t_cdf`, found by bracketing and bisection."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df, tol)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < p:
        lo, hi = hi, hi * 2.0
        if math.isinf(hi):
            raise ArithmeticError(f"could not bracket quantile p={p}, df={df}")
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        err = t_cdf(mid, df) - p
        if abs(err) <= tol * 1e-2:
            return mid
        if err < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * math.ulp(mid):
            break
    return 0.5 * (lo + hi)


def calibrate_alpha(q: float, eta: float, df: float = 1.5, quantile=None) -> float:
    """Scale ``alpha`` making a sole-asset bank fail with probability ``q``.

    ``quantile`` maps a probability to the standard quantile of the log-return
    law; it defaults to the Student-t quantile with ``df`` degrees of freedom.
    """
    if not 0.0 < q < 0.5:
        raise ValueError(f"q must lie in (0, 0.5), got {q}")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    crit = t_quantile(q, df) if quantile is None else quantile(q)
    return crit / math.log1p(-eta)


def sample_gamma(shape: float, rng: np.random.Generator, size=None):
    """Gamma(shape, scale=1) draws; shapes below 1 are boosted.

    For ``shape < 1`` a Gamma(shape + 1) draw is multiplied by ``U**(1/shape)``.
    """
    if not shape > 0:
        raise ValueError(f"shape must be positive, got {shape}")
    if shape >= 1.0:
        return rng.standard_gamma(shape, size=size)
    g = rng.standard_gamma(shape + 1.0, size=size)
    u = rng.random(size=size)
    return g * u ** (1.0 / shape)


def sample_t(df: float, rng: np.random.Generator, size=None):
    """Student-t draws via ``Z / sqrt(G / df)``, ``G ~ Gamma(df/2, scale 2)``."""
    if not df > 0:
        raise ValueError(f"df must be positive, got {df}")
    z = rng.standard_normal(size=size)
    g = 2.0 * sample_gamma(df / 2.0, rng, size=size)
    return z / np.sqrt(g / df)


@dataclass(frozen=True)
class LossModel:
    """I.i.d. asset losses ``1 - exp(T / alpha)`` with Student-t ``T``.

    Subclasses swap the log-return law by overriding :meth:`standard_quantile`
    and :meth:`draw_standard`; calibration and the loss transform are shared.
    """

    q: float = 0.05
    eta: float = 0.05
    df: float = 1.5

    name = "t"

    def __post_init__(self):
        if not self.df > 0:
            raise ValueError(f"df must be positive, got {self.df}")
        # validates q and eta as a side effect
        object.__setattr__(self, "_alpha", calibrate_alpha(self.q, self.eta, quantile=self.standard_quantile))

    @property
    def alpha(self) -> float:
        return self._alpha

    def standard_quantile(self, p: float) -> float:
        return t_quantile(p, self.df)

    def draw_standard(self, rng: np.random.Generator, size):
        return sample_t(self.df, rng, size=size)

    def losses_from_standard(self, t):
        # exp under/overflow would otherwise yield exactly 1 or -inf
        with np.errstate(over="ignore"):
            loss = -np.expm1(np.asarray(t) / self.alpha)
        return np.clip(loss, _MIN_LOSS, _MAX_LOSS)

    def sample(self, rng: np.random.Generator, size):
        """Draw an array of losses of the given shape."""
        return self.losses_from_standard(self.draw_standard(rng, size))

    def failure_threshold(self) -> float:
        """Standardised log-return at which a sole-asset bank fails."""
        return self.alpha * math.log1p(-self.eta)


@dataclass(frozen=True)
class NormalLossModel(LossModel):
    """Same contract as :class:`LossModel` with a normal log-return law."""

    name = "normal"

    def standard_quantile(self, p: float) -> float:
        return NormalDist().inv_cdf(p)

    def draw_standard(self, rng: np.random.Generator, size):
        return rng.standard_normal(size=size)


_LAWS = {"t": LossModel, "normal": NormalLossModel}


def make_loss_model(law: str, q: float, eta: float, df: float = 1.5) -> LossModel:
    try:
        cls = _LAWS[law]
    except KeyError:
        raise ValueError(f"unknown loss law {law!r}; expected one of {sorted(_LAWS)}") from None
    return cls(q=q, eta=eta, df=df)


def sample_losses(m: int, model: LossModel, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """One loss vector of length ``m``, or ``n`` of them stacked as ``(n, m)``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    size = (m,) if n is None else (n, m)
    return model.sample(rng, size)

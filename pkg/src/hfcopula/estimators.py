"""Plug-in copula estimation from a discretely sampled path.

A path observed at times i/n is reduced to prefix sums of squared and
fourth-power increments once; realized variation, quarticity, the plug-in
copula estimate, its feasible asymptotic variance, and studentized
confidence intervals are then O(1) per query.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import (
    DEFAULT_KERNEL,
    KernelConfig,
    NearDiagonalError,
    TimePair,
    UnitPair,
    grad_psi,
    psi,
)
from .gaussmath import std_normal_quantile

__all__ = [
    "SampledPath",
    "CopulaQuery",
    "CopulaEstimate",
    "realized_variation",
    "quarticity",
    "copula_estimate",
    "variance_estimate",
    "confidence_interval",
    "boundary_aware_interval",
    "variance_quadratic_form",
    "interval_bounds",
]

# half-ulp guard so that t = k/n computed in floating point truncates to k
_INDEX_GUARD = 1e-9


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Path values X_{i/n}, i = 0..floor(n*horizon), with cached prefix sums."""

    values: np.ndarray
    n: int
    horizon: float

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must all be finite")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not (isinstance(self.horizon, (int, float)) and self.horizon > 0.0
                and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be a positive finite real, got {self.horizon!r}")
        expected = int(math.floor(self.n * self.horizon + _INDEX_GUARD)) + 1
        if vals.size != expected:
            raise ValueError(
                f"values has length {vals.size}, expected floor(n*horizon)+1 = {expected}"
            )
        d = np.diff(vals)
        sq = np.concatenate(([0.0], np.cumsum(d * d)))
        q4 = np.concatenate(([0.0], np.cumsum(d ** 4)))
        object.__setattr__(self, "_sq_prefix", sq)
        object.__setattr__(self, "_q4_prefix", q4)

    def index_at(self, t: float) -> int:
        """Grid index floor(n*t), guarding against floating-point misrounding."""
        if not (isinstance(t, (int, float)) and math.isfinite(t)):
            raise ValueError(f"time must be a finite real, got {t!r}")
        if t < 0.0 or t > self.horizon + _INDEX_GUARD / self.n:
            raise ValueError(f"time {t!r} outside [0, {self.horizon!r}]")
        return min(int(math.floor(self.n * t + _INDEX_GUARD)), self.values.size - 1)


@dataclass(frozen=True)
class CopulaQuery:
    """One (s, t, u, v) evaluation request against a path."""

    s: float
    t: float
    u: float
    v: float

    def __post_init__(self) -> None:
        for name, val in (("s", self.s), ("t", self.t)):
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0.0):
                raise ValueError(f"{name} must be a positive finite real, got {val!r}")
        for name, val in (("u", self.u), ("v", self.v)):
            if not (isinstance(val, (int, float)) and 0.0 <= val <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {val!r}")


@dataclass(frozen=True)
class CopulaEstimate:
    """Point estimate with feasible variance and a studentized interval."""

    c_hat: float
    v_hat: float
    ci_lo: float
    ci_hi: float
    level: float

    def __post_init__(self) -> None:
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level!r}")
        if not self.v_hat >= 0.0:
            raise ValueError(f"v_hat must be >= 0, got {self.v_hat!r}")
        if not (0.0 <= self.ci_lo <= self.c_hat <= self.ci_hi <= 1.0):
            raise ValueError(
                f"interval must satisfy 0 <= ci_lo <= c_hat <= ci_hi <= 1, got "
                f"({self.ci_lo!r}, {self.c_hat!r}, {self.ci_hi!r})"
            )


def realized_variation(path: SampledPath, t: float) -> float:
    """Sum of squared increments over grid times up to t."""
    return float(path._sq_prefix[path.index_at(t)])


def quarticity(path: SampledPath, t: float) -> float:
    """(n/3) times the sum of fourth-power increments up to t."""
    return float(path.n / 3.0 * path._q4_prefix[path.index_at(t)])


def copula_estimate(
    path: SampledPath, q: CopulaQuery, config: KernelConfig = DEFAULT_KERNEL
) -> float:
    """Plug-in copula value: the kernel evaluated at the realized variations."""
    rv_s = realized_variation(path, q.s)
    rv_t = realized_variation(path, q.t)
    return psi(TimePair(rv_s, rv_t), UnitPair(q.u, q.v), config)


def variance_quadratic_form(g_t: float, g_s: float, q_t: float, q_s: float) -> float:
    """2 * (g_t, g_s) M (g_t, g_s)' with M = [[q_t, q_s], [q_s, q_s]].

    Requires q_t >= q_s >= 0 (quarticity is nondecreasing), which makes M
    positive semidefinite; the expansion below is a sum of nonnegative
    terms, so the result cannot go negative through rounding.
    """
    if not (q_t >= q_s >= 0.0):
        raise ValueError(f"need q_t >= q_s >= 0, got q_t={q_t!r}, q_s={q_s!r}")
    g_sum = g_t + g_s
    return 2.0 * (q_s * g_sum * g_sum + (q_t - q_s) * g_t * g_t)


def variance_estimate(
    path: SampledPath, q: CopulaQuery, config: KernelConfig = DEFAULT_KERNEL
) -> float:
    """Feasible asymptotic variance of the plug-in estimate at query q.

    The kernel gradient is taken at the realized-variation pair and paired
    with quarticities: the d/dt component with the larger time's
    quarticity. Raises NearDiagonalError via grad_psi when the realized
    variations (nearly) coincide.
    """
    if not (0.0 < q.u < 1.0 and 0.0 < q.v < 1.0):
        raise ValueError(
            f"variance requires u, v strictly inside (0, 1), got u={q.u!r}, v={q.v!r}"
        )
    t_lo = min(q.s, q.t)
    t_hi = max(q.s, q.t)
    rv_lo = realized_variation(path, t_lo)
    rv_hi = realized_variation(path, t_hi)
    if rv_hi - rv_lo <= config.diag_rel_tol * rv_hi:
        raise NearDiagonalError(
            "realized variations nearly coincide: "
            f"[X]_s={rv_lo!r}, [X]_t={rv_hi!r}"
        )
    g_t, g_s = grad_psi(TimePair(rv_lo, rv_hi), UnitPair(q.u, q.v), config)
    q_lo = quarticity(path, t_lo)
    q_hi = quarticity(path, t_hi)
    return variance_quadratic_form(g_t, g_s, q_hi, q_lo)


def interval_bounds(
    c_hat: float, v_hat: float, n: int, u: float, v: float, level: float
) -> tuple[float, float, float]:
    """Studentized interval endpoints clipped to the Frechet bounds.

    Returns (center, lo, hi) where the center is c_hat clipped into the
    Frechet box (quadrature can overshoot it by its tolerance).
    """
    fre_lo = max(u + v - 1.0, 0.0)
    fre_hi = min(u, v)
    center = min(max(c_hat, fre_lo), fre_hi)
    half = std_normal_quantile(0.5 * (1.0 + level)) * math.sqrt(v_hat / n)
    return center, max(center - half, fre_lo), min(center + half, fre_hi)


def confidence_interval(
    path: SampledPath, q: CopulaQuery, level: float, config: KernelConfig = DEFAULT_KERNEL
) -> CopulaEstimate:
    """Plug-in estimate with a studentized confidence interval at ``level``."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    c_hat = copula_estimate(path, q, config)
    v_hat = variance_estimate(path, q, config)
    center, lo, hi = interval_bounds(c_hat, v_hat, path.n, q.u, q.v, level)
    return CopulaEstimate(c_hat=center, v_hat=v_hat, ci_lo=lo, ci_hi=hi, level=level)


def boundary_aware_interval(
    path: SampledPath, q: CopulaQuery, level: float, config: KernelConfig = DEFAULT_KERNEL
) -> CopulaEstimate:
    """Like :func:`confidence_interval`, but degenerate on the unit-square boundary.

    At u or v in {0, 1} the copula value is forced by the axioms and the
    estimator has no error there, so the interval collapses to a point and
    no gradient is needed.
    """
    if q.u in (0.0, 1.0) or q.v in (0.0, 1.0):
        c_hat = copula_estimate(path, q, config)
        return CopulaEstimate(c_hat=c_hat, v_hat=0.0, ci_lo=c_hat, ci_hi=c_hat, level=level)
    return confidence_interval(path, q, level, config)

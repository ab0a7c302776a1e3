"""Scalar Gaussian primitives and adaptive quadrature.

Everything here is deliberately dependency-free (stdlib ``math`` only) so
that the copula kernel built on top of it can be cross-checked against
vectorized scipy routines in the tests without sharing code paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "QuadratureConfig",
    "QuadratureError",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
    "integrate",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class QuadratureError(RuntimeError):
    """Raised when the adaptive integrator cannot reach the requested tolerance."""

    def __init__(self, message: str, estimate: float = math.nan, error: float = math.nan):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerance and subdivision budget for :func:`integrate`."""

    abs_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0.0 and math.isfinite(self.abs_tol)):
            raise ValueError(f"abs_tol must be a positive finite float, got {self.abs_tol!r}")
        if self.max_subdivisions < 1:
            raise ValueError(f"max_subdivisions must be >= 1, got {self.max_subdivisions!r}")


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function.

    Accurate in both tails; relative error stays near machine precision
    down to the underflow threshold.
    """
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_pdf(x: float) -> float:
    """Standard normal density."""
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


# Rational minimax coefficients (Wichura's PPND16 split at |p - 1/2| <= 0.425
# and r = sqrt(-log(min(p, 1-p))) <= 5).
_CENTRAL_NUM = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_CENTRAL_DEN = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_MIDDLE_NUM = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_MIDDLE_DEN = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_TAIL_NUM = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_TAIL_DEN = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coeffs, r: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * r + c
    return acc


def std_normal_quantile(p: float) -> float:
    """Inverse standard normal CDF.

    Rational approximation polished by one Newton step, skipped where the
    density underflows (the correction would be 0/0 noise there).
    """
    if not (0.0 < p < 1.0) or not math.isfinite(p):
        raise ValueError(f"quantile argument must lie strictly in (0, 1), got {p!r}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        x = q * _poly(_CENTRAL_NUM, r) / _poly(_CENTRAL_DEN, r)
    else:
        r = p if q < 0.0 else 1.0 - p
        r = math.sqrt(-math.log(r))
        if r <= 5.0:
            r -= 1.6
            x = _poly(_MIDDLE_NUM, r) / _poly(_MIDDLE_DEN, r)
        else:
            r -= 5.0
            x = _poly(_TAIL_NUM, r) / _poly(_TAIL_DEN, r)
        if q < 0.0:
            x = -x
    dens = std_normal_pdf(x)
    if dens > 1e-300:
        x -= (std_normal_cdf(x) - p) / dens
    return x


# 15-point Kronrod extension of 7-point Gauss on [-1, 1]; nodes are
# symmetric, only the non-negative half is stored.
_XGK = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
)
_WGK = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
)
_WG = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
)


def _kronrod_panel(f, a: float, b: float) -> tuple[float, float]:
    """One G7/K15 evaluation on [a, b]; returns (estimate, error bound)."""
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)

    fc = f(center)
    resg = _WG[3] * fc
    resk = _WGK[7] * fc
    resabs = _WGK[7] * abs(fc)
    fv = [0.0] * 15
    fv[7] = fc
    for j in range(7):
        dx = half * _XGK[j]
        f1 = f(center - dx)
        f2 = f(center + dx)
        fv[j] = f1
        fv[14 - j] = f2
        resk += _WGK[j] * (f1 + f2)
        resabs += _WGK[j] * (abs(f1) + abs(f2))
        if j % 2 == 1:
            resg += _WG[j // 2] * (f1 + f2)

    reskh = 0.5 * resk
    resasc = sum(_WGK[min(j, 14 - j)] * abs(fv[j] - reskh) for j in range(15))

    value = resk * half
    err = abs((resk - resg) * half)
    resasc *= abs(half)
    resabs *= abs(half)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    # round-off floor, as in QUADPACK
    eps50 = 50.0 * 2.220446049250313e-16
    if resabs > 2.2250738585072014e-308 / eps50:
        err = max(err, eps50 * resabs)
    return value, err


def integrate(f, a: float, b: float, config: QuadratureConfig = QuadratureConfig()) -> float:
    """Adaptive Gauss-Kronrod integration of ``f`` over [a, b].

    Bisects the interval with the largest local error estimate until the
    summed error falls below ``config.abs_tol``.

    Raises
    ------
    QuadratureError
        If the subdivision budget is exhausted first.
    ValueError
        If the endpoints are not finite or ``a > b``.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"integration endpoints must be finite, got [{a!r}, {b!r}]")
    if a > b:
        raise ValueError(f"integration requires a <= b, got [{a!r}, {b!r}]")
    if a == b:
        return 0.0

    value, err = _kronrod_panel(f, a, b)
    panels = [(err, a, b, value)]
    total_err = err
    while total_err > config.abs_tol:
        if len(panels) >= config.max_subdivisions:
            total = math.fsum(p[3] for p in panels)
            raise QuadratureError(
                f"integral over [{a!r}, {b!r}] did not converge: "
                f"error {total_err:.3e} > tolerance {config.abs_tol:.3e} "
                f"after {len(panels)} subdivisions",
                estimate=total,
                error=total_err,
            )
        worst = max(range(len(panels)), key=lambda i: panels[i][0])
        _, lo, hi, _ = panels.pop(worst)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # interval no longer splittable in floating point; keep it and
            # accept its error contribution as irreducible
            v, e = _kronrod_panel(f, lo, hi)
            panels.append((0.0, lo, hi, v))
        else:
            v1, e1 = _kronrod_panel(f, lo, mid)
            v2, e2 = _kronrod_panel(f, mid, hi)
            panels.append((e1, lo, mid, v1))
            panels.append((e2, mid, hi, v2))
        total_err = math.fsum(p[0] for p in panels)
    return math.fsum(p[3] for p in panels)

"""Growth rate of the uncoupled regular (l, r) ensemble.

The fixed-point system in ``(y, z, h)`` at weight ``omega`` reads

    y = z**(r-1)
    z = tanh(h + (l-1) * atanh(y))
    omega = tanh(h + l * atanh(y))

Subtracting the last two lines in atanh form gives
``atanh(omega) = atanh(z) + atanh(z**(r-1))``, i.e.
``omega = (z + z**(r-1)) / (1 + z**r)``, which is monotone in ``z``.  The
solver therefore brackets ``z`` and reads ``y`` and ``h`` off explicitly;
the non-trivial branch is the one continuously connected to ``z = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .curves import GrowthCurve, concave_hull, maxwell_level
from .errors import DegenerateCurve, NoConvergence

CLAMP = 1.0 - 1e-14
TRIVIAL_EDGE = 1.0 - 1e-9


def atanh(x):
    return np.arctanh(np.clip(x, -CLAMP, CLAMP))


@dataclass(frozen=True)
class EnsembleParams:
    l: int
    r: int

    def __post_init__(self):
        if int(self.l) != self.l or int(self.r) != self.r:
            raise ValueError("degrees must be integers")
        if self.l < 2:
            raise ValueError(f"variable degree must be >= 2, got {self.l}")
        if self.r <= self.l:
            raise ValueError(f"check degree must exceed variable degree, got l={self.l}, r={self.r}")

    @property
    def rate(self) -> float:
        return 1.0 - self.l / self.r


@dataclass(frozen=True)
class ScalarFixedPoint:
    omega: float
    h: float
    y: float
    z: float
    trivial: bool = False

    def residuals(self, params: EnsembleParams):
        """Residuals of the three fixed-point equations (zeros for the trivial family)."""
        if self.trivial:
            return (0.0, 0.0, 0.0)
        l, r = params.l, params.r
        return (
            abs(self.y - self.z ** (r - 1)),
            abs(self.z - math.tanh(self.h + (l - 1) * math.atanh(self.y))),
            abs(self.omega - math.tanh(self.h + l * math.atanh(self.y))),
        )


@dataclass(frozen=True)
class Thresholds:
    h_c: float
    h_it: float
    h_it_wL: float | None = None
    w: int | None = None
    L: int | None = None


def omega_of_z(z, r):
    return (z + z ** (r - 1)) / (1.0 + z**r)


def solve_scalar(params: EnsembleParams, omega: float) -> ScalarFixedPoint:
    if not -1.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [-1, 1], got {omega}")
    l, r = params.l, params.r
    if omega >= TRIVIAL_EDGE:
        return ScalarFixedPoint(1.0, math.nan, 1.0, 1.0, trivial=True)
    if omega == 0.0:
        return ScalarFixedPoint(0.0, 0.0, 0.0, 0.0)
    if omega <= -TRIVIAL_EDGE and r % 2 == 0:
        return ScalarFixedPoint(-1.0, math.nan, -1.0, -1.0, trivial=True)
    lo, hi = (0.0, 1.0) if omega > 0 else (-1.0, 0.0)
    f = lambda z: omega_of_z(z, r) - omega  # noqa: E731
    try:
        if np.sign(f(lo)) == np.sign(f(hi)):
            raise ValueError("no sign change")
        z = brentq(f, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (ValueError, RuntimeError) as exc:
        raise NoConvergence(f"no non-trivial solution at omega={omega} for {params}: {exc}") from exc
    y = z ** (r - 1)
    h = float(atanh(z) - (l - 1) * atanh(y))
    fp = ScalarFixedPoint(float(omega), h, float(y), float(z))
    worst = max(fp.residuals(params))
    if worst > 1e-10:
        raise NoConvergence(f"residual {worst:.2e} at omega={omega}", worst=worst)
    return fp


def growth_at(params: EnsembleParams, fp: ScalarFixedPoint) -> float:
    if fp.trivial:
        return 0.0
    l, r = params.l, params.r
    y, z, h, w = fp.y, fp.z, fp.h, fp.omega
    var = np.logaddexp(h + l * math.log1p(y), -h + l * math.log1p(-y))
    return (l / r) * math.log((1.0 + z**r) / 2.0) + var - l * math.log1p(z * y) - w * h


def growth_scalar(params: EnsembleParams, omega: float) -> float:
    return growth_at(params, solve_scalar(params, omega))


def default_grid(lo=0.0, step=1e-3, tail_decades=10, tail_per_decade=20):
    """Uniform grid on [lo, 1 - step] refined geometrically toward 1.

    The field diverges logarithmically at the all-zero end, so integrals of
    ``h`` need the geometric tail to be accurate to ~1e-6.
    """
    n = int(round((1.0 - step - lo) / step))
    uni = lo + step * np.arange(n + 1)
    k = np.linspace(-math.log10(step), tail_decades, int(tail_per_decade * (tail_decades + math.log10(step))) + 1)
    tail = 1.0 - 10.0 ** (-k[1:])
    return np.concatenate([uni, tail])


def field_curve(params: EnsembleParams, omega_grid) -> GrowthCurve:
    """Sample ``(omega, h, G)``; failed points are kept and flagged."""
    grid = np.asarray(omega_grid, dtype=float)
    if np.any(np.abs(grid) >= 1.0):
        raise ValueError("grid must lie inside (-1, 1)")
    h = np.full(len(grid), math.nan)
    G = np.full(len(grid), math.nan)
    ok = np.zeros(len(grid), dtype=bool)
    for i, w in enumerate(grid):
        try:
            fp = solve_scalar(params, float(w))
        except NoConvergence:
            continue
        if fp.trivial:
            continue
        h[i], G[i], ok[i] = fp.h, growth_at(params, fp), True
    return GrowthCurve(grid, h, G, ok, {"ensemble": "scalar", "l": params.l, "r": params.r})


def _settles_nontrivial(params, h, damping, tol=1e-13, max_iter=100_000):
    """Iterate the message equations at field ``h`` from ``z = tanh(h)``.

    Returns True when the iteration settles strictly below 1.
    """
    l, r = params.l, params.r
    z = math.tanh(h)
    for _ in range(max_iter):
        zn = math.tanh(h + (l - 1) * float(atanh(z ** (r - 1))))
        zn = damping * z + (1.0 - damping) * zn
        if zn >= 1.0 - 1e-12:
            return False
        if abs(zn - z) < tol:
            return zn < 1.0 - 1e-6
        z = zn
    return z < 1.0 - 1e-6


def scalar_h_it(params: EnsembleParams, width=1e-4, damping=0.5) -> float:
    """Largest field with a fixed point z < 1, by bisection over iteration outcomes."""
    lo, hi = 0.0, 0.1
    while _settles_nontrivial(params, hi, damping):
        lo, hi = hi, hi + 0.1
        if hi > 50:
            raise DegenerateCurve("no collapse to the trivial fixed point below h=50")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if _settles_nontrivial(params, mid, damping):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scalar_h_c(params: EnsembleParams, step=1e-3, return_hull=False):
    """Maxwell level of ``h(omega)`` on [0, 1).

    With ``return_hull`` also returns the :class:`HullReport` of ``G`` with the
    ``(1, 0)`` anchor, whose terminal slope is the independent estimate ``-h_c``.
    """
    curve = field_curve(params, default_grid(0.0, step))
    h_c = maxwell_level(curve, closure="right")
    if return_hull:
        return h_c, concave_hull(curve, anchors=[(1.0, 0.0)])
    return h_c


def scalar_thresholds(params: EnsembleParams) -> Thresholds:
    return Thresholds(h_c=scalar_h_c(params), h_it=scalar_h_it(params))

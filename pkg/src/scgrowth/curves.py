"""Growth curves and the post-processing shared by every solver.

A :class:`GrowthCurve` is a sampled triple ``(x, h, G)``: abscissa (relative
weight or magnetization), conjugate field, and rate (or free energy).  The
tools here work on those samples only; no spline fitting is done anywhere.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import median_filter

from .errors import CoverageGap, DegenerateCurve, NoPlateau, TooFewPoints

CSV_SCHEMA_VERSION = 1


@dataclass
class GrowthCurve:
    x: np.ndarray
    h: np.ndarray
    G: np.ndarray
    converged: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        self.G = np.asarray(self.G, dtype=float)
        if self.converged is None:
            self.converged = np.isfinite(self.h) & np.isfinite(self.G)
        self.converged = np.asarray(self.converged, dtype=bool)
        n = len(self.x)
        if not (len(self.h) == len(self.G) == len(self.converged) == n):
            raise ValueError("x, h, G and converged must have equal length")
        if n > 1 and not np.all(np.diff(self.x) > 0):
            raise ValueError("abscissae must be strictly increasing")

    @classmethod
    def from_points(cls, points, meta=None):
        """Build from unordered ``(x, h, G, converged)`` tuples."""
        pts = sorted(points, key=lambda p: p[0])
        if not pts:
            return cls(np.empty(0), np.empty(0), np.empty(0), np.empty(0, bool), dict(meta or {}))
        x, h, G, ok = zip(*pts)
        return cls(np.array(x), np.array(h), np.array(G), np.array(ok), dict(meta or {}))

    def __len__(self):
        return len(self.x)

    @property
    def failed(self):
        """Abscissae of points whose solve did not converge."""
        return self.x[~self.converged]

    def good(self) -> "GrowthCurve":
        m = self.converged
        return GrowthCurve(self.x[m], self.h[m], self.G[m], self.converged[m], dict(self.meta))

    def restrict(self, lo=-math.inf, hi=math.inf) -> "GrowthCurve":
        m = (self.x >= lo) & (self.x <= hi)
        return GrowthCurve(self.x[m], self.h[m], self.G[m], self.converged[m], dict(self.meta))

    # -- serialization -------------------------------------------------

    def to_csv(self, dest=None, columns=("x", "h", "G")) -> str:
        """Write ``x,h,G`` rows with 9 significant digits; failed points as nan."""
        buf = io.StringIO()
        buf.write(",".join(columns) + "\n")
        for x, h, G, ok in zip(self.x, self.h, self.G, self.converged):
            hv, Gv = (h, G) if ok else (math.nan, math.nan)
            buf.write(f"{x:.9g},{hv:.9g},{Gv:.9g}\n")
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def read_csv(cls, src, meta=None) -> "GrowthCurve":
        text = Path(src).read_text(encoding="utf-8") if not hasattr(src, "read") else src.read()
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float).reshape(-1, 3)
        return cls(data[:, 0], data[:, 1], data[:, 2], meta=dict(meta or {}))

    def meta_json(self) -> str:
        return json.dumps({"schema_version": CSV_SCHEMA_VERSION, **self.meta}, indent=2, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "__dict__"):
        return vars(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _xy(curve):
    if isinstance(curve, GrowthCurve):
        c = curve.good()
        return c.x, c.G
    x, y = curve
    return np.asarray(x, float), np.asarray(y, float)


# -- hull ----------------------------------------------------------------


@dataclass
class HullReport:
    x: np.ndarray
    G: np.ndarray
    x_c: float
    slope: float
    sup_distance: float
    lower: bool = False

    def __call__(self, xq):
        return np.interp(xq, self.x, self.G)

    def as_dict(self):
        return {
            "schema_version": CSV_SCHEMA_VERSION,
            "hull_x": self.x.tolist(),
            "hull_G": self.G.tolist(),
            "x_c": self.x_c,
            "slope": self.slope,
            "sup_distance": self.sup_distance,
            "kind": "convex" if self.lower else "concave",
        }


def _upper_chain(x, y):
    keep = []
    for i in range(len(x)):
        while len(keep) >= 2:
            a, b = keep[-2], keep[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross >= 0:
                keep.pop()
            else:
                break
        keep.append(i)
    return np.array(keep, dtype=int)


def concave_hull(curve, anchors=(), lower=False) -> HullReport:
    """Least concave majorant of the sampled ``G`` (greatest convex minorant if ``lower``).

    ``anchors`` are extra ``(x, G)`` points joined to the samples, typically
    the ``(1, 0)`` end point of a growth rate that the grid cannot reach.
    The tangency abscissa is the hull vertex just before the terminal segment.
    """
    x, y = _xy(curve)
    if anchors:
        ax, ay = np.array(anchors, dtype=float).reshape(-1, 2).T
        x = np.concatenate([x, ax])
        y = np.concatenate([y, ay])
        order = np.argsort(x, kind="stable")
        x, y = x[order], y[order]
    if len(x) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(x)}")
    sgn = -1.0 if lower else 1.0
    idx = _upper_chain(x, sgn * y)
    hx, hy = x[idx], y[idx]
    slope = (hy[-1] - hy[-2]) / (hx[-1] - hx[-2])
    dist = float(np.max(sgn * (np.interp(x, hx, hy) - y)))
    return HullReport(hx, hy, float(hx[-2]), float(slope), max(dist, 0.0), lower)


def hull_distance(curve, hull: HullReport) -> float:
    """Sup-norm distance between sampled ``G`` and a hull, over the shared range."""
    x, y = _xy(curve)
    m = (x >= hull.x[0]) & (x <= hull.x[-1])
    if not m.any():
        raise CoverageGap("curve and hull do not overlap")
    return float(np.max(np.abs(y[m] - hull(x[m]))))


# -- Maxwell construction --------------------------------------------------


def _crossings(x, f):
    s = f > 0
    out = []
    for i in np.nonzero(s[:-1] != s[1:])[0]:
        out.append(x[i] - f[i] * (x[i + 1] - x[i]) / (f[i + 1] - f[i]))
    return out


def _area(x, f, a, b):
    """Exact integral of the piecewise-linear interpolant of ``f`` over [a, b]."""
    inner = (x > a) & (x < b)
    xs = np.concatenate([[a], x[inner], [b]])
    fs = np.concatenate([[np.interp(a, x, f)], f[inner], [np.interp(b, x, f)]])
    return float(np.trapezoid(fs, xs))


def maxwell_level(curve, closure="auto", xtol=1e-13, monotone="raise", noise=1e-10) -> float:
    """Equal-area level of a van-der-Waals loop in ``h(x)``.

    For a level ``c`` the signed area of ``h - c`` is taken between the outer
    crossings.  With an even number of crossings the loop is open on one
    side and is closed at the domain end given by ``closure`` ("right" or
    "left"); "auto" closes on the right, which is the tangent-through-x=1
    convention of growth rates.  A non-decreasing ``h`` (no loop at all)
    raises :class:`DegenerateCurve` unless ``monotone="chord"``, which
    returns the level with zero net area over the sampled range.  Steps in
    ``h`` smaller than ``noise`` times its range are treated as flat.
    """
    if isinstance(curve, GrowthCurve):
        c = curve.good()
        x, h = c.x, c.h
    else:
        x, h = (np.asarray(v, float) for v in curve)
    if len(x) < 3:
        raise TooFewPoints("need at least 3 points")
    d = np.diff(h)
    # steps below the roundoff floor carry no direction
    d[np.abs(d) <= noise * max(np.ptp(h), 1e-300)] = 0.0
    nz = np.nonzero(d)[0]
    sd = np.sign(d[nz])
    flips = np.nonzero(sd[:-1] != sd[1:])[0]
    maxima = [h[nz[k + 1]] for k in flips if sd[k] > 0]
    minima = [h[nz[k + 1]] for k in flips if sd[k] < 0]
    if not maxima:
        if monotone == "chord" and np.all(d >= 0):
            # no loop: the equal-area level over the whole range, i.e. the
            # chord slope of the integral between the end points
            return _area(x, h, x[0], x[-1]) / (x[-1] - x[0])
        raise DegenerateCurve("h(x) has no interior maximum")
    if sd[0] > 0:
        minima.append(h[0])
    if sd[-1] < 0:
        minima.append(h[-1])
    hi = max(maxima)
    below = [m for m in minima if m < hi]
    if not below:
        raise DegenerateCurve("h(x) has no loop")
    lo = max(below)

    def area(level):
        f = h - level
        xs = _crossings(x, f)
        if len(xs) < 2:
            return math.nan
        if len(xs) % 2 == 1 or closure == "none":
            a, b = xs[0], xs[-1]
        elif closure in ("auto", "right"):
            a, b = xs[0], x[-1]
        elif closure == "left":
            a, b = x[0], xs[-1]
        else:
            raise ValueError(f"unknown closure {closure!r}")
        return _area(x, f, a, b)

    span = hi - lo
    a_lo, a_hi = lo + 1e-9 * span, hi - 1e-9 * span
    f_lo, f_hi = area(a_lo), area(a_hi)
    if not (f_lo > 0 > f_hi):
        raise DegenerateCurve(f"equal-area bracket failed: A({a_lo:.6g})={f_lo:.3g}, A({a_hi:.6g})={f_hi:.3g}")
    while a_hi - a_lo > xtol:
        mid = 0.5 * (a_lo + a_hi)
        fm = area(mid)
        if math.isnan(fm):
            raise DegenerateCurve("level left the loop during bisection")
        if fm > 0:
            a_lo = mid
        else:
            a_hi = mid
    return 0.5 * (a_lo + a_hi)


# -- integration ------------------------------------------------------------


def integrate_h(curve: GrowthCurve, x0: float, end=1.0, coverage_tol=1e-6) -> float:
    """Trapezoid integral of ``h`` from ``x0`` to ``end`` (value 0 at ``x0 == end``).

    The last sample must lie within ``coverage_tol`` of ``end``; the
    remaining sliver is not integrated.
    """
    if x0 >= end:
        return 0.0
    x, h, ok = curve.x, curve.h, curve.converged
    if len(x) == 0 or x0 < x[0] - 1e-12 or x[-1] < end - coverage_tol:
        raise CoverageGap(f"curve spans [{x[0] if len(x) else math.nan}, {x[-1] if len(x) else math.nan}], need [{x0}, {end}]")
    inside = (x >= x0) & (x <= end)
    if not ok[inside].all():
        raise CoverageGap(f"failed points inside [{x0}, {end}]: {x[inside & ~ok]}")
    return _area(x[ok], h[ok], x0, min(end, x[ok][-1]))


def difference_defect(curve: GrowthCurve, sign=-1.0) -> float:
    """Largest ``|dG/dx - sign * h|`` over grid intervals.

    ``dG/dx`` is the difference quotient of each interval and ``h`` the mean
    of its two end values, so this is the trapezoid form of ``G' = -h``
    (growth rates) or, with ``sign=+1``, ``Phi' = h`` (free energies).
    """
    c = curve.good()
    q = np.diff(c.G) / np.diff(c.x)
    return float(np.max(np.abs(q - sign * 0.5 * (c.h[1:] + c.h[:-1]))))


# -- wiggles ------------------------------------------------------------------


@dataclass
class WiggleStats:
    plateau_lo: float
    plateau_hi: float
    count: float
    period: float
    amp_h: float
    amp_G: float
    n_extrema: int

    @property
    def ratio(self):
        return self.amp_G / self.amp_h if self.amp_h > 0 else math.nan

    def as_dict(self):
        return {
            "schema_version": CSV_SCHEMA_VERSION,
            "plateau_lo": self.plateau_lo,
            "plateau_hi": self.plateau_hi,
            "count": self.count,
            "period": self.period,
            "amp_h": self.amp_h,
            "amp_G": self.amp_G,
            "ratio": self.ratio,
            "n_extrema": self.n_extrema,
        }


def _extrema(v):
    """Median-filtered values and the indices of their local extrema.

    Flat runs (the median filter produces them at smooth turning points)
    are skipped when comparing slopes; an extremum sits mid-run.
    """
    f = median_filter(v, size=5, mode="nearest")
    sgn = np.sign(np.diff(f))
    nz = np.nonzero(sgn)[0]
    idx = []
    for a, b in zip(nz[:-1], nz[1:]):
        if sgn[a] != sgn[b]:
            idx.append((a + 1 + b) // 2)
    return f, np.array(idx, dtype=int)


def wiggle_stats(curve: GrowthCurve, L: int, h_ref: float, band=0.05) -> WiggleStats:
    """Oscillation statistics of ``h`` along its plateau ``|h - h_ref| < band``.

    Extrema come from a 3-point stencil after a 5-point median filter.
    ``period`` is twice the mean extremum spacing and ``count`` is the
    plateau width divided by the period.  ``amp_G`` is measured the same way
    on ``G`` after removing a linear trend over the oscillating stretch.
    ``L`` is only recorded; the statistics do not depend on it.
    """
    c = curve.good()
    inband = np.abs(c.h - h_ref) < band
    if inband.sum() < 7:
        raise NoPlateau(f"fewer than 7 samples within {band} of {h_ref}")
    # longest contiguous run
    best, start = (0, 0), None
    for i, flag in enumerate(np.append(inband, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    sl = slice(*best)
    x, h, G = c.x[sl], c.h[sl], c.G[sl]
    if len(x) < 7:
        raise NoPlateau("plateau run shorter than 7 samples")
    lo, hi = float(x[0]), float(x[-1])
    _, ext = _extrema(h)
    if len(ext) < 2:
        return WiggleStats(lo, hi, 0.0, math.nan, 0.0, 0.0, len(ext))
    hf = median_filter(h, size=5, mode="nearest")
    spacing = float(np.mean(np.diff(x[ext])))
    period = 2.0 * spacing
    amp_h = float(np.mean(np.abs(np.diff(hf[ext])))) / 2.0
    span = slice(ext[0], ext[-1] + 1)
    xs, gs = x[span], G[span] + h_ref * x[span]
    gd = gs - np.polyval(np.polyfit(xs - xs.mean(), gs, 1), xs - xs.mean())
    gf, gext = _extrema(gd)
    amp_G = float(np.mean(np.abs(np.diff(gf[gext])))) / 2.0 if len(gext) >= 2 else 0.0
    return WiggleStats(lo, hi, (hi - lo) / period, period, amp_h, amp_G, len(ext))

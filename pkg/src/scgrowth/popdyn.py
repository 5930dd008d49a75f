"""Population dynamics for the randomized (l, r, w, L) chain.

Variables sit at positions ``-L..L``; a variable at ``i`` attaches each of
its ``l`` edges to a check at ``i + k`` with ``k`` uniform in ``[0, w-1]``.
Checks occupy ``-L..L+w-1``.  The message densities are represented by
samples:

* ``var[v, s]`` holds ``z`` at position ``v - (L + w - 1)``; rows outside
  ``-L..L`` are frozen at exactly 1;
* ``chk[c, s]`` holds ``y`` at position ``c - L``.

A sweep resamples every check row from the previous variable rows and then
every real variable row from the new check rows (double-buffered).

Randomness is counter based: each draw hashes (key, sweep, phase, position,
sample, draw index) through splitmix64, so results do not depend on how the
positions are split over threads.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field, replace

import numba as nb
import numpy as np
from scipy.optimize import brentq

from .curves import GrowthCurve
from .errors import BranchGap, CoverageGap, NotConverged
from .scalar import EnsembleParams, scalar_h_c, scalar_h_it

THREADS_ENV = "SCGROWTH_THREADS"
if "NUMBA_THREADING_LAYER" not in os.environ:
    # the portable layer; avoids probing an incompatible TBB
    nb.config.THREADING_LAYER = "workqueue"
CLAMP = 1.0 - 1e-15
LN2 = math.log(2.0)
COLLAPSE = 1.0 - 1e-3

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_LOW = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

# phases of the per-sweep streams
_CHK, _VAR, _OMEGA, _KEEP, _G_CHK, _G_VAR, _G_EDGE = range(1, 8)


@nb.njit(inline="always", cache=True)
def _mix(x):
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


@nb.njit(inline="always", cache=True)
def _row_key(key, sweep, phase, row):
    return _mix(key ^ _mix(np.uint64(sweep) * np.uint64(16) + np.uint64(phase)) ^ _mix(np.uint64(row) * np.uint64(0x100000001B3)))


@nb.njit(inline="always", cache=True)
def _split(st, w, pop):
    # two bounded integers from one 64-bit draw by multiply-shift
    k = ((st >> _S32) * np.uint64(w)) >> _S32
    idx = ((st & _LOW) * np.uint64(pop)) >> _S32
    return np.int64(k), np.int64(idx)


def split_seed(seed: int, *labels: int) -> int:
    """Sub-seed for ``labels``: splitmix64 applied along the label chain."""
    mask = (1 << 64) - 1

    def mix(x):
        x = (x + 0x9E3779B97F4A7C15) & mask
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & mask
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & mask
        return x ^ (x >> 31)

    x = mix(int(seed) & mask)
    for lab in labels:
        x = mix(((x * 0x100000001B3) & mask) ^ mix(int(lab) & mask))
    return x


@nb.njit(parallel=True, cache=True)
def _check_kernel(var, out, r, w, key, sweep):
    nc, pop = out.shape
    for c in nb.prange(nc):
        base = _row_key(key, sweep, _CHK, c)
        for s in range(pop):
            st = _mix(base + np.uint64(s))
            y = 1.0
            for _ in range(r - 1):
                st = _mix(st)
                k, idx = _split(st, w, pop)
                y *= var[c + w - 1 - k, idx]
            out[c, s] = y


@nb.njit(parallel=True, cache=True)
def _var_kernel(achk, var, out, h, l, w, key, sweep, keep):
    n_real = achk.shape[0] - w + 1
    pop = achk.shape[1]
    for p in nb.prange(n_real):
        base = _row_key(key, sweep, _VAR, p)
        kbase = _row_key(key, sweep, _KEEP, p)
        v = p + w - 1
        for s in range(pop):
            if keep > 0.0:
                u = (_mix(kbase + np.uint64(s)) >> np.uint64(11)) * (1.0 / 9007199254740992.0)
                if u < keep:
                    out[v, s] = var[v, s]
                    continue
            st = _mix(base + np.uint64(s))
            acc = h
            for _ in range(l - 1):
                st = _mix(st)
                k, idx = _split(st, w, pop)
                acc += achk[p + k, idx]
            out[v, s] = math.tanh(acc)


@nb.njit(parallel=True, cache=True)
def _field_sums(achk, l, w, key, sweep, phase):
    n_real = achk.shape[0] - w + 1
    pop = achk.shape[1]
    S = np.empty((n_real, pop))
    for p in nb.prange(n_real):
        base = _row_key(key, sweep, phase, p)
        for s in range(pop):
            st = _mix(base + np.uint64(s))
            acc = 0.0
            for _ in range(l):
                st = _mix(st)
                k, idx = _split(st, w, pop)
                acc += achk[p + k, idx]
            S[p, s] = acc
    return S


@nb.njit(parallel=True, cache=True)
def _check_term(var, r, w, key, sweep):
    nc = var.shape[0] - w + 1
    pop = var.shape[1]
    out = np.empty((nc, pop))
    for c in nb.prange(nc):
        base = _row_key(key, sweep, _G_CHK, c)
        for s in range(pop):
            st = _mix(base + np.uint64(s))
            prod = 1.0
            for _ in range(r):
                st = _mix(st)
                k, idx = _split(st, w, pop)
                prod *= var[c + w - 1 - k, idx]
            out[c, s] = math.log(max(1.0 + prod, 1e-300) / 2.0)
    return out


@nb.njit(parallel=True, cache=True)
def _var_edge_terms(var, chk, h, l, w, key, sweep):
    n_real = chk.shape[0] - w + 1
    pop = chk.shape[1]
    tv = np.empty((n_real, pop))
    te = np.empty((n_real, pop))
    for p in nb.prange(n_real):
        base = _row_key(key, sweep, _G_VAR, p)
        ebase = _row_key(key, sweep, _G_EDGE, p)
        for s in range(pop):
            st = _mix(base + np.uint64(s))
            a = h
            b = -h
            for _ in range(l):
                st = _mix(st)
                k, idx = _split(st, w, pop)
                y = chk[p + k, idx]
                a += math.log(max(1.0 + y, 1e-300))
                b += math.log(max(1.0 - y, 1e-300))
            m = max(a, b)
            tv[p, s] = m + math.log(math.exp(a - m) + math.exp(b - m))
            st = _mix(ebase + np.uint64(s))
            k, idx = _split(st, w, pop)
            st = _mix(st)
            _, idx2 = _split(st, w, pop)
            te[p, s] = math.log(max(1.0 + var[p + w - 1, idx2] * chk[p + k, idx], 1e-300))
    return tv, te


def set_threads(n: int | None = None):
    """Cap numba's worker count; ``None`` reads the environment variable."""
    if n is None:
        env = os.environ.get(THREADS_ENV)
        if not env:
            return nb.get_num_threads()
        n = int(env)
    n = max(1, min(int(n), nb.config.NUMBA_NUM_THREADS))
    nb.set_num_threads(n)
    return n


@dataclass(frozen=True)
class WindowParams:
    base: EnsembleParams
    w: int
    L: int
    pop_size: int = 10_000
    seed: int = 1
    max_sweeps: int = 2000

    def __post_init__(self):
        if self.w < 1 or self.L < 1:
            raise ValueError("need w >= 1 and L >= 1")
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")

    @property
    def n_var_rows(self):
        return 2 * self.L + 2 * self.w - 1

    @property
    def n_chk_rows(self):
        return 2 * self.L + self.w

    @property
    def real(self):
        return slice(self.w - 1, self.w - 1 + 2 * self.L + 1)

    @property
    def key(self):
        return np.uint64(split_seed(self.seed, self.base.l, self.base.r, self.w, self.L, self.pop_size))


@dataclass
class Population:
    var: np.ndarray
    chk: np.ndarray
    sweeps: int = 0
    converged: bool = False
    trivial: bool = False
    history: list = field(default_factory=list)

    @property
    def frozen(self):
        """Boolean mask over variable rows: True for the pinned boundary rows."""
        n = self.var.shape[0]
        w = (n - self.chk.shape[0]) + 1
        mask = np.ones(n, bool)
        mask[w - 1 : n - w + 1] = False
        return mask

    def copy(self):
        return Population(self.var.copy(), self.chk.copy(), self.sweeps, self.converged, self.trivial, list(self.history))


def initial_population(wp: WindowParams, z0: float) -> Population:
    """Real rows at the constant ``z0``, boundary rows at 1, checks from one sweep."""
    var = np.ones((wp.n_var_rows, wp.pop_size))
    var[wp.real] = z0
    chk = np.empty((wp.n_chk_rows, wp.pop_size))
    _check_kernel(var, chk, wp.base.r, wp.w, wp.key, np.uint64(2**62))
    return Population(var, chk)


def trivial_population(wp: WindowParams) -> Population:
    return Population(np.ones((wp.n_var_rows, wp.pop_size)), np.ones((wp.n_chk_rows, wp.pop_size)), converged=True, trivial=True)


def _atanh(chk):
    return np.arctanh(np.clip(chk, -CLAMP, CLAMP))


def de_sweep(pop: Population, h: float, wp: WindowParams, keep: float = 0.0) -> Population:
    """One synchronous update; ``keep`` retains that fraction of variable samples."""
    chk = np.empty_like(pop.chk)
    _check_kernel(pop.var, chk, wp.base.r, wp.w, wp.key, np.uint64(pop.sweeps))
    var = pop.var.copy()
    _var_kernel(_atanh(chk), pop.var, var, float(h), wp.base.l, wp.w, wp.key, np.uint64(pop.sweeps), float(keep))
    return Population(var, chk, pop.sweeps + 1, False, False, pop.history)


def mean_z(pop: Population, wp: WindowParams) -> float:
    return float(pop.var[wp.real].mean())


def _block_settled(hist, block, tol):
    if len(hist) < 2 * block:
        return False
    return abs(np.mean(hist[-block:]) - np.mean(hist[-2 * block : -block])) < tol


def relax(pop: Population, h: float, wp: WindowParams, max_sweeps=None, min_sweeps=20, block=10, tol=1e-4) -> Population:
    """Sweep at field ``h`` until the chain mean of ``z`` settles or collapses.

    Settled means the mean over the last ``block`` sweeps differs from the
    mean over the ``block`` sweeps before by less than ``tol``.  Collapse
    (mean z above ``1 - 1e-3``) marks the population trivial.
    """
    budget = wp.max_sweeps if max_sweeps is None else max_sweeps
    hist = []
    for t in range(budget):
        pop = de_sweep(pop, h, wp)
        m = mean_z(pop, wp)
        hist.append(m)
        if m > COLLAPSE:
            pop.history, pop.converged, pop.trivial = hist, True, True
            return pop
        if t + 1 >= min_sweeps and _block_settled(hist, block, tol):
            pop.history, pop.converged = hist, True
            return pop
    raise NotConverged(f"no settling at h={h} within {budget} sweeps", sweeps=budget, statistic=hist[-1])


def _require_converged(pop):
    if not pop.converged:
        raise NotConverged("population has not been relaxed", sweeps=pop.sweeps)


def omega_of_h(pop: Population, h: float, wp: WindowParams) -> tuple[float, float]:
    """Chain average of ``tanh(h + sum of l check messages)`` and its standard error."""
    _require_converged(pop)
    if np.all(pop.chk == 1.0):
        return 1.0, 0.0
    S = _field_sums(_atanh(pop.chk), wp.base.l, wp.w, wp.key, np.uint64(pop.sweeps), _OMEGA)
    t = np.tanh(h + S)
    return float(t.mean()), _se_rows(t)


def _se_rows(a, coeff=1.0):
    """Standard error of ``coeff * sum_rows(mean(row)) / n_rows``, rows independent."""
    n_rows, n = a.shape
    return float(np.sqrt(np.sum(a.var(axis=1, ddof=1) / n)) * abs(coeff) / n_rows)


@dataclass(frozen=True)
class DirectGrowth:
    G: float
    se: float
    omega: float
    omega_se: float
    h: float


def growth_direct(pop: Population, h: float, wp: WindowParams) -> DirectGrowth:
    """Three-term replica expression minus ``omega * h``.

    The check term runs over every check position ``-L..L+w-1`` and is
    weighted ``l/r`` per variable position, so the expression is stationary
    in the message densities at finite L.
    """
    _require_converged(pop)
    l, r = wp.base.l, wp.base.r
    n = 2 * wp.L + 1
    if np.all(pop.var == 1.0) and np.all(pop.chk == 1.0):
        return DirectGrowth(0.0, 0.0, 1.0, 0.0, float(h))
    tc = _check_term(pop.var, r, wp.w, wp.key, np.uint64(pop.sweeps))
    tv, te = _var_edge_terms(pop.var, pop.chk, float(h), l, wp.w, wp.key, np.uint64(pop.sweeps))
    omega, omega_se = omega_of_h(pop, h, wp)
    total = ((l / r) * tc.mean(axis=1).sum() + tv.mean(axis=1).sum() - l * te.mean(axis=1).sum()) / n
    se2 = (_se_rows(tc, l / r) * tc.shape[0] / n) ** 2 + (_se_rows(tv)) ** 2 + (_se_rows(te, l)) ** 2 + (h * omega_se) ** 2
    return DirectGrowth(float(total - omega * h), math.sqrt(se2), omega, omega_se, float(h))


# -- canonical (fixed omega) relaxation ------------------------------------


def _field_for(S, omega):
    f = lambda h: float(np.mean(np.tanh(h + S))) - omega  # noqa: E731
    lo, hi = -1.0, 1.0
    while f(lo) > 0:
        lo *= 2.0
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, lo, hi, xtol=1e-12)


def relax_canonical(pop: Population, omega: float, wp: WindowParams, sweeps=200, measure=100, keep=0.5):
    """Fixed-``omega`` relaxation; the field is re-solved every sweep.

    Each sweep draws the ``l``-message sums, sets ``h`` so their chain
    average of ``tanh(h + S)`` equals ``omega``, and then updates the
    variables with a fraction ``keep`` of samples retained.  Returns the
    population, the mean field over the last ``measure`` sweeps and its
    standard error from 10 batch means.
    """
    hs = []
    for t in range(sweeps):
        achk = _atanh(pop.chk)
        S = _field_sums(achk, wp.base.l, wp.w, wp.key, np.uint64(pop.sweeps), _OMEGA)
        h = _field_for(S, omega)
        hs.append(h)
        chk = np.empty_like(pop.chk)
        _check_kernel(pop.var, chk, wp.base.r, wp.w, wp.key, np.uint64(pop.sweeps))
        var = pop.var.copy()
        _var_kernel(_atanh(chk), pop.var, var, h, wp.base.l, wp.w, wp.key, np.uint64(pop.sweeps), keep)
        pop = Population(var, chk, pop.sweeps + 1)
    tail = np.asarray(hs[-measure:])
    batches = tail.reshape(10, -1).mean(axis=1) if measure % 10 == 0 else tail
    pop.converged = True
    pop.history = hs
    return pop, float(tail.mean()), float(batches.std(ddof=1) / math.sqrt(len(batches)))


# -- branches and the integral route ---------------------------------------


def field_branch(wp: WindowParams, h_grid, z0=None) -> GrowthCurve:
    """Fixed-field popdyn along ``h_grid`` (in the given order), warm-started.

    Points that collapse to the trivial solution are dropped.  Returns a
    curve in ``omega`` with the direct growth and standard errors in meta.
    """
    rows = []
    pop = None
    for h in h_grid:
        start = pop if pop is not None and not pop.trivial else initial_population(wp, math.tanh(h) if z0 is None else z0)
        pop = relax(start, h, wp)
        if pop.trivial:
            continue
        d = growth_direct(pop, h, wp)
        rows.append((d.omega, h, d.G, d.se, d.omega_se))
    return _branch_curve(rows, wp, "field")


def canonical_branch(wp: WindowParams, omega_grid, sweeps=200, measure=100, keep=0.5, warm=True) -> GrowthCurve:
    """Fixed-``omega`` popdyn along ``omega_grid``.

    With ``warm`` each point continues from the previous population (the
    first one gets three times the sweeps).  Otherwise every point starts
    from a constant profile; this is slower to move a front by continuation
    than to let it form, so cold starts equilibrate the plateau better.
    """
    rows = []
    pop = None
    for omega in omega_grid:
        if pop is None or not warm:
            pop = initial_population(wp, float(omega))
            n = 3 * sweeps if warm else sweeps
        else:
            n = sweeps
        pop, h, h_se = relax_canonical(pop, float(omega), wp, n, measure, keep)
        d = growth_direct(pop, h, wp)
        rows.append((float(omega), h, d.G, d.se, 0.0, h_se))
    return _branch_curve(rows, wp, "canonical")


def _branch_curve(rows, wp, kind):
    rows = sorted(rows)
    if not rows:
        return GrowthCurve(np.array([]), np.array([]), np.array([]), meta={"kind": kind})
    a = np.array(rows)
    # the same omega can come up twice in a noisy branch; keep the first
    keep = np.concatenate([[True], np.diff(a[:, 0]) > 0])
    a = a[keep]
    meta = {
        "kind": kind,
        "l": wp.base.l,
        "r": wp.base.r,
        "w": wp.w,
        "L": wp.L,
        "pop": wp.pop_size,
        "seed": wp.seed,
        "G_se": a[:, 3].tolist(),
        "omega_se": a[:, 4].tolist(),
    }
    if a.shape[1] > 5:
        meta["h_se"] = a[:, 5].tolist()
    return GrowthCurve(a[:, 0], a[:, 1], a[:, 2], meta=meta)


@dataclass(frozen=True)
class IntegralGrowth:
    curve: GrowthCurve
    se: np.ndarray
    closure: float
    closure_defect: float

    def at(self, omega: float) -> tuple[float, float]:
        """``(G, se)`` at any ``omega`` between the first branch sample and 1.

        Inside the branch the last partial interval is integrated with
        linearly interpolated ``h``; beyond it the straight closure is used.
        """
        x, h, G = self.curve.x[:-1], self.curve.h[:-1], self.curve.G[:-1]
        if not x[0] <= omega <= 1.0:
            raise CoverageGap(f"omega={omega} outside [{x[0]:.4f}, 1]")
        if omega >= x[-1]:
            return self.closure * (1.0 - omega) / (1.0 - x[-1]), float(self.se[-1])
        i = min(int(np.searchsorted(x, omega, side="right")) - 1, len(x) - 2)
        h_w = np.interp(omega, x, h)
        g = G[i + 1] + 0.5 * (h_w + h[i + 1]) * (x[i + 1] - omega)
        return float(g), float(np.interp(omega, x, self.se))


def growth_from_integral(branch: GrowthCurve, max_gap=0.05) -> IntegralGrowth:
    """``G(omega) = int_omega^1 h``: trapezoid over the branch plus a straight closure.

    The closure runs from the last sample ``(omega_e, h_e)`` to ``omega = 1``
    with slope ``-h_e``; its defect is estimated from the change of ``h``
    over the last interval, carried across the closure width.
    """
    b = branch.good()
    x, h = b.x, b.h
    if len(x) < 2:
        raise BranchGap("branch has fewer than two points")
    gaps = np.diff(x)
    if gaps.max() > max_gap * (1 + 1e-9):
        i = int(gaps.argmax())
        raise BranchGap(f"branch jumps from omega={x[i]:.4f} to {x[i + 1]:.4f}")
    width = 1.0 - x[-1]
    closure = h[-1] * width
    defect = abs(h[-1] - h[-2]) / max(x[-1] - x[-2], 1e-300) * width**2 / 2.0
    seg = 0.5 * (h[1:] + h[:-1]) * gaps
    G = closure + np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    h_se = np.asarray(b.meta.get("h_se", np.zeros(len(x))), float)
    if len(h_se) != len(x):
        h_se = np.zeros(len(x))
    # trapezoid weights of each h sample in the integral from x_i to the end
    se = np.empty(len(x))
    for i in range(len(x)):
        wts = np.zeros(len(x))
        wts[i:-1] += 0.5 * gaps[i:]
        wts[i + 1 :] += 0.5 * gaps[i:]
        wts[-1] += width
        se[i] = math.sqrt(float(np.sum((wts * h_se) ** 2)))
    meta = dict(b.meta, closure=closure, closure_defect=defect, route="integral")
    xs = np.concatenate([x, [1.0]])
    return IntegralGrowth(GrowthCurve(xs, np.concatenate([h, [math.nan]]), np.concatenate([G, [0.0]]), meta=meta), se, closure, defect)


# -- threshold -------------------------------------------------------------


def _drift(hist, window):
    """Least-squares slope of the last ``window`` entries, per sweep."""
    t = np.arange(window, dtype=float)
    return float(np.polyfit(t, np.asarray(hist[-window:]), 1)[0])


def probe_field(wp: WindowParams, h: float, max_sweeps=None, min_sweeps=100, block=10, tol=1e-4, window=200):
    """Classify the iteration from ``z = tanh(h)`` at field ``h``.

    Returns ``(nontrivial, sweeps)``.  The run is nontrivial once the
    10-sweep block rule settles; it is trivial on collapse, or when the
    chain mean of ``z`` keeps climbing faster than ``tol / block`` per sweep
    over the last ``window`` sweeps (a boundary front invading the chain,
    which ends in collapse only after thousands of sweeps near threshold).
    """
    budget = wp.max_sweeps if max_sweeps is None else max_sweeps
    pop = initial_population(wp, math.tanh(h))
    hist = []
    for t in range(budget):
        pop = de_sweep(pop, h, wp)
        hist.append(mean_z(pop, wp))
        if hist[-1] > COLLAPSE:
            return False, t + 1
        if t + 1 < min_sweeps:
            continue
        if _block_settled(hist, block, tol):
            return True, t + 1
        if t + 1 >= min_sweeps + window and _drift(hist, window) > tol / block:
            return False, t + 1
    raise NotConverged(f"probe at h={h} undecided after {budget} sweeps", sweeps=budget, statistic=hist[-1])


def _probe(wp: WindowParams, h: float, min_sweeps: int) -> bool:
    try:
        return probe_field(wp, h, min_sweeps=min_sweeps)[0]
    except NotConverged:
        return probe_field(wp, h, max_sweeps=2 * wp.max_sweeps, min_sweeps=min_sweeps)[0]


def popdyn_threshold_single(wp: WindowParams, width=2e-3, lo=None, hi=None, min_sweeps=100) -> float:
    """Bisection for the largest field whose nontrivial start does not collapse."""
    if lo is None:
        lo = scalar_h_c(wp.base, step=5e-3) - 0.03
    if hi is None:
        hi = scalar_h_it(wp.base, width=1e-4) + 0.01
    while not _probe(wp, lo, min_sweeps):
        lo -= 0.05
    while _probe(wp, hi, min_sweeps):
        hi += 0.05
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if _probe(wp, mid, min_sweeps):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ThresholdResult:
    h_it: float
    per_seed: tuple
    seeds: tuple
    ci: tuple

    def as_dict(self, wp: WindowParams):
        return {
            "schema_version": 1,
            "l": wp.base.l,
            "r": wp.base.r,
            "w": wp.w,
            "L": wp.L,
            "pop": wp.pop_size,
            "seed": wp.seed,
            "h_it": self.h_it,
            "per_seed": list(self.per_seed),
            "ci": list(self.ci),
        }


def _threshold_job(args):
    wp, width, lo, hi, min_sweeps = args
    return popdyn_threshold_single(wp, width, lo, hi, min_sweeps)


def popdyn_threshold(wp: WindowParams, n_seeds=3, width=2e-3, min_sweeps=100, workers=1) -> ThresholdResult:
    """Median over ``n_seeds`` sub-seeds of the bisection threshold.

    The bracket comes from the scalar thresholds.  ``workers > 1`` runs the
    seeds in separate processes; each seed's result does not depend on it.
    """
    lo = scalar_h_c(wp.base, step=5e-3) - 0.03
    hi = scalar_h_it(wp.base, width=1e-4) + 0.01
    seeds = tuple(split_seed(wp.seed, 0x7E5, i) % (2**63) for i in range(n_seeds))
    jobs = [(replace(wp, seed=s), width, lo, hi, min_sweeps) for s in seeds]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            vals = list(ex.map(_threshold_job, jobs))
    else:
        vals = [_threshold_job(j) for j in jobs]
    return ThresholdResult(float(np.median(vals)), tuple(vals), seeds, (float(min(vals)), float(max(vals))))


# -- histogram dump --------------------------------------------------------


def write_histogram(pop: Population, path, side="var"):
    """Binary dump: uint64 position count, uint64 pop size, then float64 rows (little-endian)."""
    a = np.ascontiguousarray(pop.var if side == "var" else pop.chk, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", a.shape[0], a.shape[1]))
        fh.write(a.tobytes())


def read_histogram(path):
    with open(path, "rb") as fh:
        n, m = struct.unpack("<QQ", fh.read(16))
        return np.frombuffer(fh.read(), dtype="<f8").reshape(n, m).copy()

"""The (l, r, L) chain: deterministic coupling with edge classes (i, i+k).

Variables sit at positions ``-L..L``, checks at ``-L..L+l-1``.  Each
variable sends ``l`` groups of edges, one group to each of the checks
``i, ..., i+l-1``; each check receives ``r/l`` edges from every variable
position in its window.  Messages are stored as

* ``y[v, k]`` -- check ``v+k`` to variable ``v`` (shape ``(2L+1, l)``,
  row ``v`` is position ``v - L``);
* ``z[c, k]`` -- variable ``c-k`` to check ``c`` (shape ``(2L+l, l)``,
  row ``c`` is position ``c - L``); entries whose variable ``c-k`` falls
  outside the chain are pinned to 1.

so ``y[v, k]`` and ``z[v+k, k]`` ride the same edge class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, root

from .curves import GrowthCurve
from .errors import NoConvergence
from .scalar import EnsembleParams, atanh

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ChainParams:
    base: EnsembleParams
    L: int

    def __post_init__(self):
        if self.base.r % self.base.l:
            raise ValueError(f"r/l must be an integer, got l={self.base.l}, r={self.base.r}")
        if self.L < 1:
            raise ValueError("L must be >= 1")

    @property
    def n_var(self):
        return 2 * self.L + 1

    @property
    def n_chk(self):
        return 2 * self.L + self.base.l


@dataclass
class MessageField:
    y: np.ndarray
    z: np.ndarray
    h: float
    omega: float

    def copy(self):
        return MessageField(self.y.copy(), self.z.copy(), self.h, self.omega)


@lru_cache(maxsize=64)
def _real_mask(l, L):
    c = np.arange(2 * L + l)[:, None]
    k = np.arange(l)[None, :]
    return (c - k >= 0) & (c - k <= 2 * L)


def _check_update(cp: ChainParams, z):
    """Check-to-variable messages from the variable-to-check field."""
    l, q = cp.base.l, cp.base.r // cp.base.l
    zq = z**q
    out = np.empty_like(z)
    for k in range(l):
        p = z[:, k] ** (q - 1)
        for kk in range(l):
            if kk != k:
                p = p * zq[:, kk]
        out[:, k] = p
    y = np.empty((cp.n_var, l))
    for k in range(l):
        y[:, k] = out[k : k + cp.n_var, k]
    return y


def _variable_update(cp: ChainParams, y, h):
    a = atanh(y)
    S = a.sum(axis=1)
    z = np.ones((cp.n_chk, cp.base.l))
    for k in range(cp.base.l):
        z[k : k + cp.n_var, k] = np.tanh(h + S - a[:, k])
    return z, S


def _z_by_variable(cp: ChainParams, z):
    zv = np.empty((cp.n_var, cp.base.l))
    for k in range(cp.base.l):
        zv[:, k] = z[k : k + cp.n_var, k]
    return zv


def _field_for(S, omega):
    """Field making the chain-averaged magnetization equal ``omega``."""
    f = lambda h: float(np.mean(np.tanh(h + S))) - omega  # noqa: E731
    lo, hi = -1.0, 1.0
    while f(lo) > 0:
        lo *= 2.0
        if lo < -1e6:
            raise NoConvergence(f"cannot reach omega={omega}")
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise NoConvergence(f"cannot reach omega={omega}")
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def residuals(cp: ChainParams, field: MessageField):
    """Per-class residuals ``(res_y, res_z, res_omega)`` of the message equations."""
    y = _check_update(cp, field.z)
    z, S = _variable_update(cp, field.y, field.h)
    mask = _real_mask(cp.base.l, cp.L)
    res_z = np.where(mask, np.abs(field.z - z), 0.0)
    res_w = abs(float(np.mean(np.tanh(field.h + S))) - field.omega)
    return np.abs(field.y - y), res_z, res_w


def worst_residual(cp, field):
    ry, rz, rw = residuals(cp, field)
    vals = [(ry.max(), ("y", np.unravel_index(ry.argmax(), ry.shape))), (rz.max(), ("z", np.unravel_index(rz.argmax(), rz.shape))), (rw, ("omega", None))]
    worst, where = max(vals, key=lambda t: t[0])
    return float(worst), where


def initial_field(cp: ChainParams) -> MessageField:
    mask = _real_mask(cp.base.l, cp.L)
    z = np.where(mask, 0.0, 1.0)
    return MessageField(_check_update(cp, z), z, 0.0, 0.0)


def chain_messages_at_field(cp: ChainParams, h: float, init: MessageField | None = None, damping=0.5, tol=1e-13, max_iter=100_000) -> MessageField:
    """Damped synchronous iteration at fixed field ``h``; ``omega`` is read off."""
    z = (init or initial_field(cp)).z.copy()
    mask = _real_mask(cp.base.l, cp.L)
    for _ in range(max_iter):
        y = _check_update(cp, z)
        zn, S = _variable_update(cp, y, h)
        zn = np.where(mask, damping * z + (1.0 - damping) * zn, 1.0)
        delta = float(np.abs(zn - z).max())
        z = zn
        if delta < tol:
            break
    else:
        raise NoConvergence(f"fixed-field iteration at h={h} did not settle", worst=delta)
    y = _check_update(cp, z)
    S = atanh(y).sum(axis=1)
    return MessageField(y, z, float(h), float(np.mean(np.tanh(h + S))))


def _relax_canonical(cp, z, omega, damping=0.5, tol=1e-10, max_iter=20_000):
    mask = _real_mask(cp.base.l, cp.L)
    h = 0.0
    for _ in range(max_iter):
        y = _check_update(cp, z)
        S = atanh(y).sum(axis=1)
        h = _field_for(S, omega)
        zn, _ = _variable_update(cp, y, h)
        zn = np.where(mask, damping * z + (1.0 - damping) * zn, 1.0)
        delta = float(np.abs(zn - z).max())
        z = zn
        if delta < tol:
            break
    return z, h


def _newton(cp, z, h, omega):
    mask = _real_mask(cp.base.l, cp.L)

    def F(x):
        zz = np.ones_like(z)
        zz[mask] = x[:-1]
        y = _check_update(cp, zz)
        zn, S = _variable_update(cp, y, x[-1])
        return np.concatenate([(zz - zn)[mask], [np.mean(np.tanh(x[-1] + S)) - omega]])

    x0 = np.concatenate([z[mask], [h]])
    sol = root(F, x0, method="hybr", options={"xtol": 1e-14, "maxfev": 200 * (len(x0) + 1)})
    zz = np.ones_like(z)
    zz[mask] = np.clip(sol.x[:-1], -1.0, 1.0)
    return zz, float(sol.x[-1])


def _finish(cp, z, h, omega):
    y = _check_update(cp, z)
    return MessageField(y, z, h, float(omega))


def chain_fixed_point(cp: ChainParams, omega: float, init: MessageField | None = None) -> MessageField:
    """Fixed point of the chain message equations at average weight ``omega``.

    The field ``h`` is the Lagrange multiplier of the weight constraint.  A
    warm start goes straight to Newton polishing; otherwise (or if that
    fails) a damped synchronous sweep, re-solving ``h`` each sweep so the
    constraint holds throughout, brings the messages close first.
    """
    if not abs(omega) < 1.0:
        raise ValueError(f"need |omega| < 1, got {omega}")
    if init is not None:
        z, h = _newton(cp, init.z.copy(), init.h, omega)
        field = _finish(cp, z, h, omega)
        if worst_residual(cp, field)[0] <= RESIDUAL_TOL:
            return field
    start = init.z.copy() if init is not None else initial_field(cp).z
    z, h = _relax_canonical(cp, start, omega)
    z, h = _newton(cp, z, h, omega)
    field = _finish(cp, z, h, omega)
    worst, where = worst_residual(cp, field)
    if worst > RESIDUAL_TOL:
        raise NoConvergence(f"chain solve at omega={omega}: worst residual {worst:.2e} at {where}", worst=worst, where=where)
    return field


def chain_growth(cp: ChainParams, field: MessageField) -> float:
    l, r = cp.base.l, cp.base.r
    q = r // l
    y, z, h = field.y, field.z, field.h
    with np.errstate(divide="ignore"):
        # y = 1 sends one branch of the variable term to -inf; logaddexp handles it
        checks = (l / r) * np.log((1.0 + np.prod(z**q, axis=1)) / 2.0).sum()
        variables = np.logaddexp(h + np.log1p(y).sum(axis=1), -h + np.log1p(-y).sum(axis=1)).sum()
        edges = np.log1p(y * _z_by_variable(cp, z)).sum()
    return float((checks + variables - edges) / cp.n_var - field.omega * h)


def variable_magnetization(cp: ChainParams, field: MessageField):
    """Per-position ``tanh(h + sum_k atanh y)``; its mean is ``omega``."""
    return np.tanh(field.h + atanh(field.y).sum(axis=1))


def _extrapolate(prev, omega):
    if len(prev) < 2:
        return prev[-1][1]
    (w0, f0), (w1, f1) = prev[-2], prev[-1]
    t = (omega - w1) / (w1 - w0)
    z = np.clip(f1.z + t * (f1.z - f0.z), -1.0, 1.0)
    return MessageField(f1.y, z, f1.h + t * (f1.h - f0.h), omega)


def chain_curve(cp: ChainParams, omega_grid, keep_fields=False):
    """Continuation along the grid from the point nearest 0 outward.

    Returns a :class:`GrowthCurve` of ``(omega, h1, G1)``; failed points are
    flagged and continuation resumes from the last good solution.  With
    ``keep_fields`` a dict ``omega -> MessageField`` is returned as well.
    """
    grid = np.asarray(omega_grid, dtype=float)
    order = np.argsort(grid)
    grid = grid[order]
    start = int(np.argmin(np.abs(grid)))
    h = np.full(len(grid), math.nan)
    G = np.full(len(grid), math.nan)
    ok = np.zeros(len(grid), dtype=bool)
    fields = {}
    for idx_seq in (range(start, len(grid)), range(start - 1, -1, -1)):
        prev = []
        if idx_seq.start < start:
            prev = [(grid[start], fields[start])] if start in fields else []
        for i in idx_seq:
            w = float(grid[i])
            try:
                init = _extrapolate(prev, w) if prev else None
                f = chain_fixed_point(cp, w, init)
            except NoConvergence:
                continue
            fields[i] = f
            prev = (prev + [(w, f)])[-2:]
            h[i], G[i], ok[i] = f.h, chain_growth(cp, f), True
    meta = {"ensemble": "chain", "l": cp.base.l, "r": cp.base.r, "L": cp.L}
    curve = GrowthCurve(grid, h, G, ok, meta)
    if keep_fields:
        return curve, {float(grid[i]): f for i, f in fields.items()}
    return curve

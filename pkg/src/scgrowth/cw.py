"""Curie-Weiss model and its windowed chain, the mean-field reference case.

Single model: ``Phi(m) = -(J/2) m^2 - H2(m)`` with ``H2`` the binary entropy
of Bernoulli((1+m)/2) in nats, and isotherm ``h(m) = Phi'(m)``.

Chain: blocks at ``-L..L`` each see the uniform average ``g_i`` of the
magnetizations within distance ``w`` (ghost blocks outside the chain are
pinned).  At fixed chain average ``m_bar`` the profile is stationary for

    m_i = tanh(J * g_i + h)

with ``h`` the multiplier of the constraint, and

    Phi_chain = (1/(2L+1)) sum_i [ -(J/2) m_i (g_i + b_i) - H2(m_i) ]

where ``b_i`` is the ghost part of ``g_i``.  Counting the ghost coupling
twice keeps ``d Phi_chain / d m_bar = h`` exact at finite L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, root
from scipy.special import xlogy

from .curves import GrowthCurve
from .errors import NoConvergence

LN2 = math.log(2.0)


def binary_entropy(m):
    p, q = (1.0 + np.asarray(m, float)) / 2.0, (1.0 - np.asarray(m, float)) / 2.0
    return -(xlogy(p, p) + xlogy(q, q))


def cw_free_energy(J: float, m) -> float:
    if np.any(np.abs(m) > 1.0):
        raise ValueError("|m| must be <= 1")
    return -(J / 2.0) * np.asarray(m, float) ** 2 - binary_entropy(m)


def cw_vdw(J: float, m):
    m = np.asarray(m, float)
    if np.any(np.abs(m) >= 1.0):
        raise ValueError("isotherm is undefined at |m| = 1")
    return -J * m + np.arctanh(m)


def cw_roots(J: float, h: float):
    """All roots of ``m = tanh(J m + h)`` in (-1, 1), ascending."""
    f = lambda m: math.tanh(J * m + h) - m  # noqa: E731
    grid = np.linspace(-1.0, 1.0, 4001)
    vals = np.array([f(v) for v in grid])
    out = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            out.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0:
            out.append(brentq(f, grid[i], grid[i + 1], xtol=1e-15))
    return out


@dataclass(frozen=True)
class CWParams:
    J: float
    L: int
    w: int
    pin: tuple = (1.0, 1.0)

    def __post_init__(self):
        if self.J <= 0:
            raise ValueError("J must be positive")
        if self.w < 1 or self.L < 1:
            raise ValueError("need w >= 1 and L >= 1")


@dataclass
class MagnetizationProfile:
    m: np.ndarray
    h: float
    pin: tuple

    @property
    def mean(self):
        return float(self.m.mean())


def _padded(cwp: CWParams, m):
    w = cwp.w
    return np.concatenate([np.full(w, cwp.pin[0]), m, np.full(w, cwp.pin[1])])


def window_average(cwp: CWParams, m):
    k = 2 * cwp.w + 1
    return np.convolve(_padded(cwp, m), np.ones(k) / k, mode="valid")


def ghost_part(cwp: CWParams):
    return window_average(cwp, np.zeros(2 * cwp.L + 1))


def _residual(cwp, m, h):
    return np.abs(m - np.tanh(cwp.J * window_average(cwp, m) + h))


def cw_chain_profile(cwp: CWParams, h: float, init=None, damping=0.5, tol=1e-12, max_iter=200_000) -> MagnetizationProfile:
    """Damped iteration of the windowed CW equation at fixed field ``h``."""
    m = np.zeros(2 * cwp.L + 1) if init is None else np.array(init, float)
    for _ in range(max_iter):
        mn = damping * m + (1.0 - damping) * np.tanh(cwp.J * window_average(cwp, m) + h)
        m = mn
        res = float(_residual(cwp, m, h).max())
        if res <= tol:
            return MagnetizationProfile(m, float(h), cwp.pin)
    raise NoConvergence(f"CW chain at h={h} did not converge", worst=res)


def _field_for(cwp, g, m_bar):
    f = lambda h: float(np.mean(np.tanh(cwp.J * g + h))) - m_bar  # noqa: E731
    lo, hi = -1.0, 1.0
    while f(lo) > 0:
        lo *= 2.0
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, lo, hi, xtol=1e-15)


def cw_chain_constrained(cwp: CWParams, m_bar: float, init=None, damping=0.5, tol=1e-12) -> MagnetizationProfile:
    """Stationary profile with chain average ``m_bar``; ``h`` is the multiplier."""
    n = 2 * cwp.L + 1
    if init is None:
        m = np.full(n, m_bar)
        h = 0.0
    else:
        m, h = np.array(init.m, float), init.h

    def F(x):
        mm, hh = x[:-1], x[-1]
        return np.concatenate([mm - np.tanh(cwp.J * window_average(cwp, mm) + hh), [mm.mean() - m_bar]])

    def polish(m, h):
        sol = root(F, np.concatenate([m, [h]]), method="hybr", options={"xtol": 1e-14})
        return np.clip(sol.x[:-1], -1.0, 1.0), float(sol.x[-1])

    if init is not None:
        mm, hh = polish(m, h)
        if np.abs(F(np.concatenate([mm, [hh]]))).max() <= tol:
            return MagnetizationProfile(mm, hh, cwp.pin)
    for _ in range(50_000):
        g = window_average(cwp, m)
        h = _field_for(cwp, g, m_bar)
        mn = damping * m + (1.0 - damping) * np.tanh(cwp.J * g + h)
        delta = float(np.abs(mn - m).max())
        m = mn
        if delta < 1e-10:
            break
    m, h = polish(m, h)
    worst = float(np.abs(F(np.concatenate([m, [h]]))).max())
    if worst > tol:
        raise NoConvergence(f"CW chain at m_bar={m_bar}: residual {worst:.2e}", worst=worst)
    return MagnetizationProfile(m, h, cwp.pin)


def chain_free_energy(cwp: CWParams, prof: MagnetizationProfile) -> float:
    m = prof.m
    g = window_average(cwp, m)
    b = ghost_part(cwp)
    return float(np.mean(-(cwp.J / 2.0) * m * (g + b) - binary_entropy(m)))


def cw_chain_curve(cwp: CWParams, m_grid) -> GrowthCurve:
    """``(m_bar, h, Phi_chain)`` by continuation outward from the point nearest 0."""
    grid = np.sort(np.asarray(m_grid, float))
    start = int(np.argmin(np.abs(grid)))
    h = np.full(len(grid), math.nan)
    Phi = np.full(len(grid), math.nan)
    ok = np.zeros(len(grid), bool)
    first = None
    for seq in (range(start, len(grid)), range(start - 1, -1, -1)):
        prev = first
        for i in seq:
            try:
                prof = cw_chain_constrained(cwp, float(grid[i]), prev)
            except NoConvergence:
                continue
            prev = prof
            if i == start:
                first = prof
            h[i], Phi[i], ok[i] = prof.h, chain_free_energy(cwp, prof), True
    meta = {"model": "cw-chain", "J": cwp.J, "L": cwp.L, "w": cwp.w, "pin": list(cwp.pin)}
    return GrowthCurve(grid, h, Phi, ok, meta)


def cw_curve(J: float, m_grid) -> GrowthCurve:
    """Single-model ``(m, h(m), Phi(m))`` on a grid inside (-1, 1)."""
    m = np.asarray(m_grid, float)
    return GrowthCurve(m, cw_vdw(J, m), cw_free_energy(J, m), meta={"model": "cw", "J": J})

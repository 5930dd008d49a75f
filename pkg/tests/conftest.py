import os
import sys
from functools import lru_cache

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from scgrowth.chain import ChainParams, chain_curve  # noqa: E402
from scgrowth.curves import concave_hull  # noqa: E402
from scgrowth.scalar import EnsembleParams, default_grid, field_curve  # noqa: E402


@lru_cache(maxsize=None)
def scalar_curve(l, r, step=1e-3):
    return field_curve(EnsembleParams(l, r), default_grid(0.0, step))


@lru_cache(maxsize=None)
def scalar_hull(l, r):
    return concave_hull(scalar_curve(l, r), anchors=[(1.0, 0.0)])


def plateau_grid(L, lo=0.0, hi=0.99, coarse=5e-3):
    """Coarse grid, refined to step 1/(16L) over the plateau region."""
    fine = 1.0 / (16 * L)
    a = np.arange(lo, 0.45, coarse)
    b = np.arange(0.45, 0.9, fine)
    c = np.arange(0.9, hi, coarse)
    return np.unique(np.round(np.concatenate([a, b, c]), 12))


@lru_cache(maxsize=None)
def chain_curve_cached(l, r, L, kind="coarse"):
    cp = ChainParams(EnsembleParams(l, r), L)
    if kind == "coarse":
        grid = np.round(np.arange(0.0, 0.99, 5e-3), 12)
    elif kind == "fine":
        grid = plateau_grid(L)
    elif kind == "step1e-3":
        grid = np.round(np.arange(0.0, 0.99, 1e-3), 12)
    elif kind == "tail":
        grid = default_grid(0.0, 5e-3, tail_decades=8)
    else:
        raise ValueError(kind)
    return chain_curve(cp, grid)


@pytest.fixture(scope="session")
def scalar36():
    return scalar_curve(3, 6)


# -- acceptance report ------------------------------------------------------

ACCEPTANCE = {}


@pytest.fixture
def record():
    """``record(n, ok, detail)`` stores one acceptance line and returns ``ok``."""

    def _record(n, ok, detail):
        ACCEPTANCE[n] = (bool(ok), detail)
        return bool(ok)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

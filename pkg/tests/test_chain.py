import numpy as np
import pytest

from conftest import chain_curve_cached, scalar_hull
from oracles import TABLE_H_C, chain_anchor
from scgrowth.chain import (
    ChainParams,
    MessageField,
    chain_fixed_point,
    chain_growth,
    chain_messages_at_field,
    residuals,
    variable_magnetization,
    worst_residual,
)
from scgrowth.curves import difference_defect, hull_distance, integrate_h
from scgrowth.errors import NoConvergence
from scgrowth.scalar import EnsembleParams

P36 = EnsembleParams(3, 6)


def test_params():
    with pytest.raises(ValueError):
        ChainParams(EnsembleParams(3, 7), 4)
    with pytest.raises(ValueError):
        ChainParams(P36, 0)
    cp = ChainParams(P36, 4)
    assert (cp.n_var, cp.n_chk) == (9, 11)


def test_trivial_at_large_field():
    cp = ChainParams(P36, 8)
    f = chain_messages_at_field(cp, 2.0)
    assert np.all(f.z >= 1 - 1e-12) and np.all(f.y >= 1 - 1e-12)
    assert abs(f.omega - 1.0) < 1e-12
    exact = MessageField(np.ones_like(f.y), np.ones_like(f.z), 2.0, 1.0)
    assert abs(chain_growth(cp, exact)) < 1e-12


@pytest.mark.parametrize("L", [1, 2, 4, 8])
def test_origin_anchor(L):
    cp = ChainParams(P36, L)
    f = chain_fixed_point(cp, 0.0)
    assert abs(chain_growth(cp, f) - chain_anchor(3, 6, L)) < 1e-10


def test_fixed_point_residuals_and_pins():
    cp = ChainParams(P36, 8)
    f = chain_fixed_point(cp, 0.6)
    ry, rz, rw = residuals(cp, f)
    assert max(ry.max(), rz.max(), rw) <= 1e-10
    assert worst_residual(cp, f)[0] <= 1e-10
    # variable c - k outside the chain: pinned
    for c in range(cp.n_chk):
        for k in range(3):
            if not 0 <= c - k <= 2 * cp.L:
                assert f.z[c, k] == 1.0
    assert abs(variable_magnetization(cp, f).mean() - 0.6) < 1e-9


def test_symmetry_L32():
    cp = ChainParams(P36, 32)
    a, b = chain_fixed_point(cp, 0.3), chain_fixed_point(cp, -0.3)
    assert abs(a.h + b.h) < 1e-9
    assert abs(chain_growth(cp, a) - chain_growth(cp, b)) < 1e-10


def test_rejects_boundary_weight():
    with pytest.raises(ValueError):
        chain_fixed_point(ChainParams(P36, 4), 1.0)


def test_derivative_identity():
    c = chain_curve_cached(3, 6, 8, "step1e-3")
    assert c.converged.all()
    assert difference_defect(c) <= 5e-4


def test_plateau_level():
    c = chain_curve_cached(3, 6, 32)
    plateau = c.h[(c.x > 0.55) & (c.x < 0.8)]
    assert abs(np.median(plateau) - TABLE_H_C[(3, 6)]) < 5e-3


def test_integral_matches_direct():
    c = chain_curve_cached(3, 6, 8, "tail").good()
    for w0 in (0.0, 0.3, 0.6, 0.9):
        i = int(np.argmin(abs(c.x - w0)))
        assert abs(integrate_h(c, c.x[i], coverage_tol=1e-7) - c.G[i]) < 1e-3


def test_hull_distance_shrinks():
    hull = scalar_hull(3, 6)
    d = [hull_distance(chain_curve_cached(3, 6, L), hull) for L in (4, 8, 16)]
    assert d[0] > d[1] > d[2]


def test_failed_point_flagged(monkeypatch):
    import scgrowth.chain as ch

    real = ch.chain_fixed_point

    def flaky(cp, omega, init=None):
        if abs(omega - 0.2) < 1e-12:
            raise NoConvergence("forced")
        return real(cp, omega, init)

    monkeypatch.setattr(ch, "chain_fixed_point", flaky)
    c = ch.chain_curve(ChainParams(P36, 2), [0.0, 0.1, 0.2, 0.3])
    assert c.converged.tolist() == [True, True, False, True]

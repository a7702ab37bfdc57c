import numpy as np
import pytest

from nagumo_sap.flow import ConstantProfile, integrate
from nagumo_sap.orbits import LoopFamily
from nagumo_sap.phase_core import period, potential


@pytest.mark.parametrize("a", [0.4, 0.6])
def test_family_period_matches_quadrature(a):
    fam = LoopFamily(a)
    s = 1e-4
    orb = fam.orbit(s)
    q = fam.x_of_u(orb.u_t)
    assert orb.period == pytest.approx(period(a, q), rel=1e-9)


def test_advance_agrees_with_integrator():
    fam = LoopFamily(0.6)
    s = 1e-5
    orb = fam.orbit(s)
    x0, y0 = orb.position(3.0)
    u0 = fam.u_of_x(x0)
    side = 1 if y0 > 0 else -1
    x1, y1, gain = fam.advance(s, u0, side, 25.0)
    tr = integrate(ConstantProfile(0.6), (x0, y0), 0.0, 25.0, rtol=1e-12, atol=1e-14)
    assert np.allclose([x1[0], y1[0]], tr.end_point().as_array(), atol=1e-7)


def test_tiny_gap_keeps_energy():
    fam = LoopFamily(0.6)
    s = 1e-40
    orb = fam.orbit(s)
    x, y = orb.position(0.3 * orb.period)
    # level relative to the loop, from the saddle-centred polynomial
    u = fam.u_of_x(x)
    assert fam.gap_of(u, y) == pytest.approx(s, rel=1e-3) or abs(fam.gap_of(u, y) - s) < 1e-17
    assert orb.period > 100.0

import math

import numpy as np
import pytest
from scipy.integrate import quad

from nagumo_sap.errors import DomainError, NoHomoclinic
from nagumo_sap.phase_core import (
    Case,
    Tag,
    classify_level,
    critical_levels,
    homoclinic_apex,
    homoclinic_level,
    linked,
    period,
    potential,
    time_of_flight,
)
from nagumo_sap.quadrature import inv_sqrt_integral


def test_potential_matches_antiderivative():
    a = 0.37
    xs = np.linspace(0.0, 1.0, 11)
    for x in xs:
        ref, _ = quad(lambda s: s * (1 - s) * (s - a), 0.0, x)
        assert potential(a, x) == pytest.approx(ref, abs=1e-15)


def test_potential_is_flat_outside_strip():
    assert potential(0.3, -2.0) == potential(0.3, 0.0)
    assert potential(0.3, 5.0) == pytest.approx(potential(0.3, 1.0), abs=0)


def test_critical_levels_closed_form():
    a = 0.4
    lv = critical_levels(a)
    assert lv.center == pytest.approx(a ** 3 * (a - 2) / 12, rel=1e-14)
    assert lv.saddle0 == 0.0
    assert lv.saddle1 == pytest.approx((1 - 2 * a) / 12, rel=1e-14)


@pytest.mark.parametrize("a,c,tag", [
    (0.4, -0.001, Tag.ClosedCycle),
    (0.4, 0.0, Tag.HomoclinicUnion),
    (0.4, 0.01, Tag.InnerArc),
    (0.4, critical_levels(0.4).saddle1, Tag.SaddleManifoldUnion),
    (0.4, 0.1, Tag.TwoOuterCurves),
    (0.4, -1.0, Tag.Empty),
    (0.5, 0.0, Tag.HeteroclinicUnion),
    (0.5, -0.001, Tag.ClosedCycle),
])
def test_classify_level(a, c, tag):
    assert classify_level(a, c).tag is tag


def test_classify_case():
    assert classify_level(0.2, 0.0).case is Case.aBelowHalf
    assert classify_level(0.5, 0.0).case is Case.aEqualHalf
    assert classify_level(0.8, 0.0).case is Case.aAboveHalf


def test_homoclinic_symmetry():
    for a in (0.1, 0.3, 0.45):
        assert homoclinic_apex(a) == pytest.approx(1.0 - homoclinic_apex(1.0 - a), abs=1e-15)
        assert potential(a, homoclinic_apex(a)) == pytest.approx(homoclinic_level(a), abs=1e-16)


def test_half_has_no_homoclinic():
    with pytest.raises(NoHomoclinic):
        homoclinic_level(0.5)


def test_linking_rule():
    # linked exactly when the loops' apexes overlap
    assert linked(0.45, 0.55)
    assert not linked(0.2, 0.8)


def test_time_of_flight_against_adaptive_quadrature():
    a, c = 0.35, -0.002
    lo, hi = 0.2, 0.5
    ref, _ = quad(lambda x: 1.0 / math.sqrt(2.0 * (c - potential(a, x))), lo, hi, epsabs=0, epsrel=1e-13)
    assert time_of_flight(a, c, lo, hi) == pytest.approx(ref, rel=1e-11)


def test_time_of_flight_rejects_saddle_level_through_interior():
    with pytest.raises(DomainError):
        time_of_flight(0.4, 0.0, -0.1, 0.3)


def test_endpoint_singularity():
    # 1/sqrt(1 - x^2) on [0, 1] integrates to pi/2
    assert inv_sqrt_integral(np.array([1.0, 0.0, -1.0, 0.0, 0.0]), 0.0, 1.0) == pytest.approx(math.pi / 2, rel=1e-13)


def test_period_tends_to_linear_value():
    a = 0.3
    lin = 2 * math.pi / math.sqrt(a * (1 - a))
    assert period(a, a + 1e-4) == pytest.approx(lin, rel=1e-7)
    assert period(a, a + 0.15) > lin

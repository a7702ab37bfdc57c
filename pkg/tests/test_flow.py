import numpy as np
import pytest

from nagumo_sap.errors import ValidationError
from nagumo_sap.flow import ConstantProfile, StepProfile, count_turns, integrate, xprime_zeros
from nagumo_sap.phase_core import energy_array


def test_profile_alternates_weights():
    p = StepProfile.uniform(0.4, 0.6, 1.0, 0.1, -2, 4)
    assert p.a_of_index(0) == 0.4 and p.a_of_index(1) == 0.6 and p.a_of_index(-1) == 0.6
    assert p.t(3) - p.t(2) == pytest.approx(10.0)
    segs = p.segments(p.t(0) + 1.0, p.t(2) - 1.0)
    assert [s[0] for s in segs] == [0.4, 0.6]


def test_profile_validation():
    with pytest.raises(ValidationError):
        StepProfile(0.6, 0.4, np.arange(3.0), 1.0, 0.1)
    with pytest.raises(ValidationError):
        StepProfile(0.4, 0.6, np.array([0.0, 1.0, 1.0]), 1.0, 0.1)
    with pytest.raises(ValidationError):
        StepProfile(0.4, 0.6, np.arange(3.0), 2.0, 0.1)


def test_periodic_profile_repeats():
    p = StepProfile.periodic(0.4, 0.6, (1, 2, 1, 1, 2, 1), 0.5, 0, 18)
    g = np.diff(p.switch_times)
    assert np.allclose(g[:6], g[6:12]) and np.allclose(g[6:12], g[12:18])


def test_forward_backward_roundtrip():
    p = StepProfile.uniform(0.4, 0.6, 1.0, 0.2, 0, 6)
    fwd = integrate(p, (0.5, 0.05), 0.3, 17.0)
    back = integrate(p, fwd.end_point(), 17.0, 0.3)
    assert np.allclose(back.end_point().as_array(), [0.5, 0.05], atol=1e-9)


def test_energy_constant_on_each_piece():
    tr = integrate(ConstantProfile(0.45), (0.3, 0.0), 0.0, 150.0)
    _, zz = tr.dense_samples(4)
    e = energy_array(0.45, zz)
    assert np.ptp(e) < 1e-10


def test_zero_count_on_small_oscillation():
    a = 0.5
    tr = integrate(ConstantProfile(a), (0.5 + 1e-3, 0.0), 0.0, 100.0)
    period = 2 * np.pi / np.sqrt(a * (1 - a))
    zs = xprime_zeros(tr, 0.1, 100.0)
    assert len(zs) == int(np.floor(100.0 / (period / 2)))
    assert np.allclose(np.diff(zs), period / 2, rtol=1e-5)
    tc = count_turns(tr, (0.1, zs[5] + 0.1), center_a=a)
    assert tc.turns == 3

import numpy as np
import pytest

from nagumo_sap.flow import ConstantProfile, StepProfile
from nagumo_sap.manifolds import (
    ManifoldKind,
    graph_window,
    intersect_paths,
    saddle_exponent,
    stable_continuum,
    unstable_continuum,
)
from nagumo_sap.paths import PlanarPath


def test_graph_window_closed_form():
    w = graph_window(0.4, 0.6)
    assert w.a_minus_0 == pytest.approx((1.4 - np.sqrt(0.76)) / 3, abs=1e-15)
    assert w.a_plus_1 == pytest.approx(1 - w.a_minus_0, abs=1e-15)


def test_exponents():
    assert saddle_exponent(0.3, 0) == pytest.approx(np.sqrt(0.3))
    assert saddle_exponent(0.3, 1) == pytest.approx(np.sqrt(0.7))


def test_unstable_curve_of_origin_is_level_zero():
    g = unstable_continuum(ConstantProfile(0.4), 0.0, 0)
    xy = g.curve.xy
    ref = np.sqrt(np.maximum(-2 * (-xy[:, 0] ** 4 / 4 + 1.4 * xy[:, 0] ** 3 / 3 - 0.2 * xy[:, 0] ** 2), 0))
    assert np.max(np.abs(xy[:, 1] - ref)) < 1e-10
    assert g.kind is ManifoldKind.of(True, 0)


def test_step_profile_curve_sits_between_frozen_curves():
    p = StepProfile.uniform(0.4, 0.6, 1.0, 0.011, -3, 4)
    g = stable_continuum(p, p.t(1), 1, 20.0)
    assert g.localization_excess <= 1e-6
    # the stable curve of (1, 0) arrives from the left, so y > 0 on the window
    assert np.all(g.curve.xy[1:, 1] > 0.0)


def test_polyline_intersection():
    a = PlanarPath(np.linspace(0, 1, 3), np.array([[0, 0], [1, 1], [2, 2]], float))
    b = PlanarPath(np.linspace(0, 1, 2), np.array([[0, 2], [2, 0]], float))
    res = intersect_paths(a, b)
    assert len(res) == 1
    assert np.allclose(list(res)[0].as_array(), [1.0, 1.0])

import numpy as np
import pytest

from nagumo_sap.connections import connect
from nagumo_sap.errors import ThresholdViolation
from nagumo_sap.flow import StepProfile
from nagumo_sap.stretch import eps_star


@pytest.fixture(scope="module")
def hetero(geom46):
    e = eps_star(1, 1.0, geom46.thresholds, "connection")
    p = StepProfile.uniform(0.4, 0.6, 1.0, 0.9 * e, -3, 3)
    return p, connect(p, [], "heteroclinic", M=1, geometry=geom46)


def test_heteroclinic_certificates(hetero):
    _, res = hetero
    v = res.validation
    assert v["passed"]
    assert v["head_zeros"] == 0 and v["tail_zeros"] == 0
    assert v["residuals"]["start"] < 1e-4 and v["residuals"]["end"] < 1e-4


def test_heteroclinic_runs_from_zero_to_one(hetero):
    p, res = hetero
    tr = res.trajectory
    start, end = tr(tr.t_min), tr(tr.t_max)
    assert np.hypot(*start) < 1e-4 and np.hypot(end[0] - 1.0, end[1]) < 1e-4
    _, zz = tr.dense_samples(2)
    assert np.all(np.diff(zz[:, 0]) >= -1e-12)


def test_meeting_point_in_first_rectangle(hetero, geom46):
    from nagumo_sap.regions import Status
    _, res = hetero
    mp = np.asarray(res.extra["meeting_point"], float)
    assert geom46.rects.by_label("R1").contains(mp) != Status.OUTSIDE


def test_connection_threshold(geom46):
    e = eps_star(1, 1.0, geom46.thresholds, "connection")
    p = StepProfile.uniform(0.4, 0.6, 1.0, 1.2 * e, -3, 3)
    with pytest.raises(ThresholdViolation):
        connect(p, [], "heteroclinic", M=1, geometry=geom46)

import pytest

from nagumo_sap.errors import InvalidItinerary, RealizationFailed, ThresholdViolation, ValidationError
from nagumo_sap.flow import StepProfile
from nagumo_sap.itinerary import BlockWindows, Itinerary, block_stages, itinerary_stages, realize_finite
from nagumo_sap.stretch import eps_star


def test_itinerary_caps_turns():
    assert Itinerary.of([(1, 2), (3, 1)]).M == 3
    with pytest.raises(InvalidItinerary):
        Itinerary.of([(1, 4)], M=3)
    with pytest.raises(InvalidItinerary):
        Itinerary.of([(0, 1)], M=3)
    with pytest.raises(InvalidItinerary):
        Itinerary.of([(1, 2, 3)])


def test_itinerary_json_and_repeat():
    it = Itinerary.from_json("[[1, 2], [2, 1]]", M=2)
    assert it.K == 2 and it.repeat(2).K == 4 and it.as_list() == [[1, 2], [2, 1]]


def test_window_indices():
    p = StepProfile.uniform(0.4, 0.6, 1.0, 0.5, 0, 12)
    w = BlockWindows(p, 2)
    assert w.s_windows(1)["I_plus"] == (p.s(1), p.s(2))
    assert w.s_windows(2)["I_minus"] == (p.s(10), p.s(11))
    assert w.t_windows(1)["I"] == (p.t(0), p.t(6))
    with pytest.raises(ValidationError):
        BlockWindows(p, 3)


def test_stage_plan_alternates_weights():
    p = StepProfile.uniform(0.4, 0.6, 1.0, 0.5, 0, 12)
    st = block_stages(p, 1, (2, 3))
    assert [s.a for s in st] == [0.4, 0.6, 0.4, 0.6, 0.4, 0.6]
    assert [s.turns for s in st] == [None, 2, None, None, 3, None]
    assert (st[0].source, st[0].target) == ("R1", "R2")
    assert (st[5].source, st[5].target) == ("R4", "R1")
    assert len(itinerary_stages(p, Itinerary.of([(1, 1), (1, 1)]))) == 12


def test_threshold_is_enforced(geom46):
    e = eps_star(1, 1.0, geom46.thresholds)
    p = StepProfile.uniform(0.4, 0.6, 1.0, 1.01 * e, -3, 9)
    with pytest.raises(ThresholdViolation):
        realize_finite(p, Itinerary.of([(1, 1)]), M=1, geometry=geom46)


def test_failure_reports_deepest_interval(geom46):
    e = eps_star(1, 1.0, geom46.thresholds)
    p = StepProfile.uniform(0.4, 0.6, 1.0, 0.9 * e, -3, 9)
    with pytest.raises(RealizationFailed) as info:
        realize_finite(p, Itinerary.of([(1, 1)]), M=1, geometry=geom46)
    assert info.value.interval is not None

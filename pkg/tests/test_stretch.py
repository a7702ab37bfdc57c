import math

import pytest

from nagumo_sap.errors import ValidationError
from nagumo_sap.stretch import LoopTwistMap, eps_star, run_relation, standard_relations, winding_class


def test_thresholds_symmetric_pair(geom46):
    th = geom46.thresholds
    assert th.T1_star == pytest.approx(12.288425746, rel=1e-8)
    assert th.period_plus == pytest.approx(th.period_minus, rel=1e-9)
    assert th.tau == pytest.approx(th.tau_prime, rel=1e-9)
    assert th.T2_star(1) == pytest.approx(2 * th.period_plus)


def test_eps_star_modes(geom46):
    th = geom46.thresholds
    assert eps_star(2, 1.0, th) == pytest.approx(1.0 / th.T2_star(2))
    with pytest.raises(ValidationError):
        eps_star(0, 1.0, th)
    with pytest.raises(ValidationError):
        eps_star(1, 1.0, th, "other")


@pytest.mark.parametrize("theta,j", [(1.5 * math.pi, 1), (3.5 * math.pi, 2), (0.5 * math.pi, None)])
def test_winding_bins(theta, j):
    assert winding_class(theta, 1)[0] == j


def test_transfer_relation_passes(geom46):
    th = geom46.thresholds
    rel = standard_relations(0.4, 0.6, 1.1 * th.T1_star, 1.1 * th.T2_star(3), 3)[0]
    rep = run_relation(rel, geom46.rects, path_budget=2)
    assert rep.passed and all(len(w.crossings) >= 1 for w in rep.witnesses)


def test_twist_relation_finds_all_classes(geom46):
    th = geom46.thresholds
    rel = standard_relations(0.4, 0.6, 1.1 * th.T1_star, 1.1 * th.T2_star(2), 2)[4]
    assert isinstance(rel.fmap, LoopTwistMap)
    rep = run_relation(rel, geom46.rects, path_budget=1)
    assert rep.passed
    classes = {c for w in rep.witnesses for c in w.classes if c is not None}
    assert {1, 2} <= classes


def test_twist_fails_well_below_threshold(geom46):
    th = geom46.thresholds
    rel = standard_relations(0.4, 0.6, 1.1 * th.T1_star, 0.3 * th.T2_star(3), 3)[4]
    assert not run_relation(rel, geom46.rects, path_budget=1).passed

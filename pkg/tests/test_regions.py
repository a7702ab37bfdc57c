import numpy as np
import pytest

from nagumo_sap.regions import D, D_inverse, Status, gap_spanning_path, spanning_path


def test_energy_difference_closed_form(geom46):
    x = np.linspace(0, 1, 7)
    assert np.allclose(D(0.4, 0.6, x), 0.2 * x ** 2 * (3 - 2 * x) / 6, atol=1e-16)
    assert D(0.4, 0.6, D_inverse(0.4, 0.6, 1 / 60)) == pytest.approx(1 / 60, rel=1e-13)


def test_rectangles_live_in_their_half_planes(geom46):
    r = geom46.rects
    assert r.by_label("R1").halfplane == 1 and r.by_label("R3").halfplane == -1
    assert r.by_label("R2").halfplane == 1 and r.by_label("R4").halfplane == -1


@pytest.mark.parametrize("label", ["R1", "R2", "R3", "R4"])
def test_spanning_path_joins_minus_sides(geom46, label):
    rect = geom46.rects.by_label(label)
    path = spanning_path(geom46.rects, label, "minus", 0.5)
    xy = path(np.linspace(0.0, 1.0, 201))
    st, _ = rect.classify(xy)
    inner = st[1:-1]
    assert np.all(inner == Status.INSIDE)
    assert st[0] != Status.OUTSIDE and st[-1] != Status.OUTSIDE


@pytest.mark.parametrize("label", ["R2", "R4"])
def test_gap_path_covers_the_thin_band(geom46, label):
    gp = gap_spanning_path(geom46.rects, label, 0.5)
    gaps = gp.gap(np.array([0.0, 0.5, 1.0]))
    assert gaps[0] > gaps[1] > gaps[2] >= 0.0


def test_q_values_lie_beyond_p(geom46):
    c = geom46.rects.constants
    assert c.p_minus < c.q_plus < 1.0
    assert 0.0 < c.q_minus < c.p_plus

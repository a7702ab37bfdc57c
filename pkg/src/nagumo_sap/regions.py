"""Oriented rectangles built from energy bands of the two frozen systems.

Every rectangle is the intersection of two energy bands (one per system)
with a half plane.  Its boundary arcs are the places where one constraint
is active; an arc is named by the constraint id:

    ("A", "lo") / ("A", "hi")   band of system A at its lower/upper level
    ("B", "lo") / ("B", "hi")   same for system B
    ("Y", "0")                  the x-axis

Membership is evaluated from polynomials only, never from polygons.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .errors import ConstructionError, DomainError, PathError, QNotFound
from .paths import PhasePoint, PlanarPath
from .phase_core import (
    energy_array,
    homoclinic_level,
    homoclinic_apex,
    manifold_level,
    potential,
    saddle_gap_coeffs,
)

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class EnergyBand:
    a: float
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ConstructionError("band with lo > hi")

    def energies(self, xy: np.ndarray) -> np.ndarray:
        return energy_array(self.a, xy)


class Status(enum.IntEnum):
    OUTSIDE = 0
    BOUNDARY = 1
    INSIDE = 2


Side = tuple  # ("A"|"B"|"Y", "lo"|"hi"|"0")


@dataclass(frozen=True)
class OrientedRect:
    label: str
    band_a: EnergyBand
    band_b: EnergyBand
    halfplane: int  # +1: y > 0, -1: y < 0
    minus_sides: tuple  # two Side tags
    plus_sides: tuple
    # x-range on the axis belonging to the closure (for the ("Y","0") side)
    axis_range: tuple | None = None

    def sides(self, which: str) -> tuple:
        return self.minus_sides if which == "minus" else self.plus_sides

    def margins(self, xy: np.ndarray, e_a: np.ndarray | None = None, e_b: np.ndarray | None = None) -> np.ndarray:
        """Signed distances to the five constraints (positive = satisfied).

        Columns: A lo, A hi, B lo, B hi, Y.  Energies may be supplied when a
        caller knows them more accurately than the rounded point does.
        """
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        ea = self.band_a.energies(xy) if e_a is None else np.asarray(e_a, float)
        eb = self.band_b.energies(xy) if e_b is None else np.asarray(e_b, float)
        return np.column_stack([
            ea - self.band_a.lo,
            self.band_a.hi - ea,
            eb - self.band_b.lo,
            self.band_b.hi - eb,
            self.halfplane * xy[:, 1],
        ])

    def classify(self, xy: np.ndarray, e_a=None, e_b=None, tol: float = BOUNDARY_TOL):
        """(status array, index of the most violated constraint or -1)."""
        m = self.margins(xy, e_a, e_b)
        worst = np.argmin(m, axis=1)
        mn = m[np.arange(m.shape[0]), worst]
        status = np.where(mn > tol, Status.INSIDE, np.where(mn >= -tol, Status.BOUNDARY, Status.OUTSIDE))
        viol = np.where(mn < -tol, worst, -1)
        return status, viol

    def contains(self, p) -> Status:
        xy = np.asarray(p.as_array() if isinstance(p, PhasePoint) else p, float)
        st, _ = self.classify(xy[None, :])
        return Status(int(st[0]))

    def describe(self) -> dict:
        return {
            "label": self.label,
            "band_a": {"a": self.band_a.a, "lo": self.band_a.lo, "hi": self.band_a.hi},
            "band_b": {"a": self.band_b.a, "lo": self.band_b.lo, "hi": self.band_b.hi},
            "halfplane": self.halfplane,
            "minus_sides": [list(s) for s in self.minus_sides],
            "plus_sides": [list(s) for s in self.plus_sides],
        }


SIDE_OF_COLUMN = (("A", "lo"), ("A", "hi"), ("B", "lo"), ("B", "hi"), ("Y", "0"))


# --------------------------------------------------------------- constants

@dataclass(frozen=True)
class RectConstants:
    p_minus: float
    p_plus: float
    q_plus: float | None = None
    q_minus: float | None = None


def choose_p(a_minus: float, a_plus: float) -> tuple[float, float]:
    if not (a_minus < 0.5 < a_plus):
        raise DomainError("need a_minus < 1/2 < a_plus")
    lo = max(homoclinic_apex(a_minus), a_plus)
    p_minus = 0.5 * (lo + 1.0)
    hi = min(a_minus, homoclinic_apex(a_plus))
    p_plus = 0.5 * hi
    assert lo < p_minus < 1.0 and 0.0 < p_plus < hi
    return p_minus, p_plus


def D(a_minus: float, a_plus: float, x):
    """F_{a-}(x) - F_{a+}(x) on [0, 1]; nonnegative and nondecreasing."""
    xc = np.clip(np.asarray(x, float), 0.0, 1.0)
    val = (a_plus - a_minus) * xc * xc * (3.0 - 2.0 * xc) / 6.0
    return float(val) if np.ndim(val) == 0 else val


def D_inverse(a_minus: float, a_plus: float, value: float) -> float:
    top = D(a_minus, a_plus, 1.0)
    if not (0.0 <= value <= top):
        raise DomainError("value outside the range of D")
    if value == 0.0:
        return 0.0
    if value == top:
        return 1.0
    return brentq(lambda x: D(a_minus, a_plus, x) - value, 0.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)


# -------------------------------------------------------------- rectangles

@dataclass(frozen=True)
class Rects:
    a_minus: float
    a_plus: float
    constants: RectConstants
    R1: OrientedRect
    R2: OrientedRect | None
    R3: OrientedRect
    R4: OrientedRect | None

    def by_label(self, label: str) -> OrientedRect:
        return {"R1": self.R1, "R2": self.R2, "R3": self.R3, "R4": self.R4}[label]

    def describe(self) -> dict:
        c = self.constants
        return {
            "a_minus": self.a_minus,
            "a_plus": self.a_plus,
            "p_minus": c.p_minus,
            "p_plus": c.p_plus,
            "q_plus": c.q_plus,
            "q_minus": c.q_minus,
            "rects": [r.describe() for r in (self.R1, self.R2, self.R3, self.R4) if r is not None],
        }


def strip_bands(a_minus, a_plus, p_minus, p_plus) -> tuple[EnergyBand, EnergyBand]:
    s_minus = EnergyBand(a_minus, potential(a_minus, p_minus), manifold_level(a_minus))
    s_plus = EnergyBand(a_plus, potential(a_plus, p_plus), manifold_level(a_plus))
    return s_minus, s_plus


def build_rects(a_minus: float, a_plus: float, constants: RectConstants) -> Rects:
    pm, pp = constants.p_minus, constants.p_plus
    s_minus, s_plus = strip_bands(a_minus, a_plus, pm, pp)
    R1 = OrientedRect("R1", s_minus, s_plus, +1, (("A", "lo"), ("A", "hi")), (("B", "lo"), ("B", "hi")))
    # the S(a+) arcs are the minus sides of R3 (lower half plane)
    R3 = OrientedRect("R3", s_minus, s_plus, -1, (("B", "lo"), ("B", "hi")), (("A", "lo"), ("A", "hi")))
    R2 = R4 = None
    if constants.q_plus is not None:
        qp = constants.q_plus
        if not (pm < qp < 1.0):
            raise ConstructionError("q_plus must satisfy p_minus < q_plus < 1")
        inner = EnergyBand(a_plus, potential(a_plus, qp), (1.0 - 2.0 * a_plus) / 12.0)
        # E_{a-} <= (1-2a-)/12 is implied by the other constraints and acts as a slack limit
        R2 = OrientedRect("R2", s_minus, inner, +1, (("B", "hi"), ("B", "lo")), (("A", "lo"), ("Y", "0")),
                          axis_range=(qp, 1.0))
    if constants.q_minus is not None:
        qm = constants.q_minus
        if not (0.0 < qm < pp):
            raise ConstructionError("q_minus must satisfy 0 < q_minus < p_plus")
        inner = EnergyBand(a_minus, potential(a_minus, qm), 0.0)
        R4 = OrientedRect("R4", inner, s_plus, -1, (("A", "lo"), ("A", "hi")), (("B", "lo"), ("Y", "0")),
                          axis_range=(0.0, qm))
    return Rects(a_minus, a_plus, constants, R1, R2, R3, R4)


# ------------------------------------------------------------------- paths

@dataclass(frozen=True)
class LevelCurvePath:
    """Arc of the level E_a = c between abscissae x0 and x1 on one branch.

    ``cluster`` concentrates parameters near a turning-point end (0 or 1).
    """

    a: float
    c: float
    x0: float
    x1: float
    branch: int
    cluster: int | None = None

    def x_of(self, sigma):
        s = np.asarray(sigma, float)
        if self.cluster == 0:
            w = s * s
        elif self.cluster == 1:
            w = 1.0 - (1.0 - s) ** 2
        else:
            w = s
        return self.x0 + (self.x1 - self.x0) * w

    def __call__(self, sigma) -> np.ndarray:
        x = self.x_of(sigma)
        gap = self.c - potential(self.a, x)
        y = self.branch * np.sqrt(2.0 * np.maximum(gap, 0.0))
        return np.column_stack([np.atleast_1d(x), np.atleast_1d(y)])

    def polyline(self, n: int = 257) -> PlanarPath:
        s = np.linspace(0.0, 1.0, n)
        return PlanarPath(s, self(s), {"a": self.a, "c": self.c})


def spanning_path(rects: Rects, label: str, across: str, fraction: float = 0.5) -> LevelCurvePath:
    """A level-curve path in the rectangle joining its two `across` sides.

    ``fraction`` selects the tracing level inside the free band.
    """
    am, ap = rects.a_minus, rects.a_plus
    R = rects.by_label(label)
    if R is None:
        raise PathError(f"{label} not constructed")
    d = lambda v: D_inverse(am, ap, v)
    if label in ("R1", "R3") and across in ("minus", "plus"):
        # trace a level of the system whose band is NOT the across pair
        along_a = (label == "R1") == (across == "minus")  # across A sides -> trace system B
        branch = R.halfplane
        if along_a:
            c = R.band_b.lo + fraction * (R.band_b.hi - R.band_b.lo)
            # E_a = c + D(x) runs over [band_a.lo, band_a.hi]
            x0, x1 = d(R.band_a.lo - c), d(R.band_a.hi - c)
            return LevelCurvePath(ap, c, x0, x1, branch)
        c = R.band_a.lo + fraction * (R.band_a.hi - R.band_a.lo)
        # E_b = c - D(x) runs from band_b.hi (small x) to band_b.lo
        x0, x1 = d(c - R.band_b.hi), d(c - R.band_b.lo)
        return LevelCurvePath(am, c, x0, x1, branch)
    if label == "R2" and across == "plus":
        c = R.band_b.lo + fraction * (R.band_b.hi - R.band_b.lo)
        q = _closed_turning_outer(ap, c)
        x1 = d(R.band_a.lo - c)
        return LevelCurvePath(ap, c, q, x1, +1, cluster=0)
    if label == "R4" and across == "plus":
        c = R.band_a.lo + fraction * (R.band_a.hi - R.band_a.lo)
        q = _closed_turning_outer(am, c)
        x1 = d(c - R.band_b.lo)
        return LevelCurvePath(am, c, q, x1, -1, cluster=0)
    if label == "R2" and across == "minus":
        c = R.band_a.lo + fraction * (R.band_a.hi - R.band_a.lo)
        x0, x1 = d(c - R.band_b.hi), d(c - R.band_b.lo)
        return LevelCurvePath(am, c, x0, x1, +1)
    if label == "R4" and across == "minus":
        c = R.band_b.lo + fraction * (R.band_b.hi - R.band_b.lo)
        x0, x1 = d(R.band_a.lo - c), d(R.band_a.hi - c)
        return LevelCurvePath(ap, c, x0, x1, -1)
    raise PathError(f"no spanning path recipe for {label}/{across}")


def D_inverse_array(a_minus: float, a_plus: float, values) -> np.ndarray:
    """Vectorized D_inverse by safeguarded Newton on [0, 1]."""
    v = np.asarray(values, float)
    k = a_plus - a_minus
    if np.any(v < 0.0) or np.any(v > k / 6.0):
        raise DomainError("value outside the range of D")
    lo = np.zeros_like(v)
    hi = np.ones_like(v)
    x = np.full_like(v, 0.5)
    for _ in range(100):
        f = k * x * x * (3.0 - 2.0 * x) / 6.0 - v
        lo = np.where(f < 0.0, x, lo)
        hi = np.where(f >= 0.0, x, hi)
        d = k * x * (1.0 - x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - f / d
        bad = ~((xn > lo) & (xn < hi))
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        done = np.abs(xn - x) <= 2e-16 * np.maximum(np.abs(xn), 1e-300)
        x = xn
        if np.all(done):
            break
    return x


@dataclass(frozen=True)
class GapPath:
    """Minus-spanning path of R2 or R4 parametrized by an energy gap.

    The path runs along the level E = c of the tracing system; its points are
    labelled by s = E_hom - E of the target system (whose homoclinic loop
    bounds the rectangle), from s = s_max at t = 0 to s -> 0 at t = 1 via
    s = s_max * exp(-rate * t / (1 - t)).  Keeping s as data lets maps of the
    target system act exactly even when s is far below double resolution.
    """

    a_minus: float
    a_plus: float
    target_is_plus: bool
    c: float
    s_max: float
    branch: int
    rate: float = 10.0
    s_floor: float = 1e-300

    @property
    def a_target(self) -> float:
        return self.a_plus if self.target_is_plus else self.a_minus

    @property
    def a_trace(self) -> float:
        return self.a_minus if self.target_is_plus else self.a_plus

    def gap(self, sigma) -> np.ndarray:
        t = np.clip(np.asarray(sigma, float), 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            z = np.where(t < 1.0, self.rate * t / np.maximum(1.0 - t, 1e-300), np.inf)
            s = self.s_max * np.exp(-z)
        return np.maximum(s, self.s_floor)

    def x_of(self, sigma) -> np.ndarray:
        e_t = homoclinic_level(self.a_target) - self.gap(sigma)
        val = (self.c - e_t) if self.target_is_plus else (e_t - self.c)
        return D_inverse_array(self.a_minus, self.a_plus, val)

    def __call__(self, sigma) -> np.ndarray:
        x = np.atleast_1d(self.x_of(sigma))
        gap = self.c - potential(self.a_trace, x)
        y = self.branch * np.sqrt(2.0 * np.maximum(gap, 0.0))
        return np.column_stack([x, y])


def gap_spanning_path(rects: Rects, label: str, fraction: float = 0.5, rate: float = 10.0) -> GapPath:
    am, ap = rects.a_minus, rects.a_plus
    R = rects.by_label(label)
    if R is None:
        raise PathError(f"{label} not constructed")
    if label == "R2":
        c = R.band_a.lo + fraction * (R.band_a.hi - R.band_a.lo)
        s_max = float(_p_np(saddle_gap_coeffs(ap, 1), 1.0 - rects.constants.q_plus))
        return GapPath(am, ap, True, c, s_max, +1, rate)
    if label == "R4":
        c = R.band_b.lo + fraction * (R.band_b.hi - R.band_b.lo)
        s_max = float(_p_np(saddle_gap_coeffs(am, 0), rects.constants.q_minus))
        return GapPath(am, ap, False, c, s_max, -1, rate)
    raise PathError("gap-parametrized paths exist for R2 and R4 only")


def _p_np(c, u):
    return c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * c[4])))


def _closed_turning_outer(a: float, c: float) -> float:
    """Turning point of the closed a-orbit at level c on the saddle side."""
    if a > 0.5:
        return brentq(lambda x: potential(a, x) - c, a, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return brentq(lambda x: potential(a, x) - c, 0.0, a, xtol=1e-16, rtol=4 * np.finfo(float).eps)


# ---------------------------------------------------------- q constants

def _r1_band_test(a_minus, a_plus, p_minus, p_plus, xy: np.ndarray, halfplane: int) -> np.ndarray:
    s_minus, s_plus = strip_bands(a_minus, a_plus, p_minus, p_plus)
    R = OrientedRect("tmp", s_minus, s_plus, halfplane, (), ())
    st, _ = R.classify(xy)
    return st != Status.OUTSIDE


def _sup_on_axis(a_back: float, T1: float, inside_fn, dist_grid: np.ndarray, to_x) -> float:
    """Largest axis point (smallest distance to the saddle) whose backward
    image satisfies inside_fn; distances are measured from the saddle."""
    xs = to_x(dist_grid)
    pts = np.column_stack([xs, np.zeros_like(xs)])
    out, _, status = _kernels.batch_propagate(pts, [a_back], [-T1])
    inside = inside_fn(out[:, -1, :]) & (status == 0)
    if not inside.any():
        raise QNotFound("no axis point maps back into the rectangle; T1 too small?")
    # dist_grid is decreasing: the last inside index has the smallest distance
    idx = int(np.nonzero(inside)[0][-1])
    if idx == dist_grid.size - 1:
        raise QNotFound("sup reaches the saddle at grid resolution")
    d_in, d_out = dist_grid[idx], dist_grid[idx + 1]
    while d_in - d_out > 1e-9 * d_in:
        mid = math.sqrt(d_in * d_out) if d_out > 0 else 0.5 * d_in
        x = to_x(np.array([mid]))
        o, _, _ = _kernels.batch_propagate(np.array([[x[0], 0.0]]), [a_back], [-T1])
        if inside_fn(o[:, -1, :])[0]:
            d_in = mid
        else:
            d_out = mid
    return d_in


def compute_q(a_minus: float, a_plus: float, p_minus: float, p_plus: float, T1: float,
              n_grid: int = 4000) -> tuple[float, float]:
    """q_plus = sup{x in [p-, 1]: Psi_-^{-T1}(x, 0) in R1}, q_minus by the mirror recipe.

    The search is done in the distance to the saddle on a logarithmic grid
    (the sup sits exponentially close to x = 1 for T1 above threshold).
    """
    grid_plus = np.geomspace(1.0 - p_minus, 1e-15, n_grid)
    r1 = lambda xy: _r1_band_test(a_minus, a_plus, p_minus, p_plus, xy, +1)
    d_plus = _sup_on_axis(a_minus, T1, r1, grid_plus, lambda d: 1.0 - d)
    grid_minus = np.geomspace(p_plus, 1e-15, n_grid)
    r3 = lambda xy: _r1_band_test(a_minus, a_plus, p_minus, p_plus, xy, -1)
    d_minus = _sup_on_axis(a_plus, T1, r3, grid_minus, lambda d: d)
    # relative safety margin toward the interior of [p-, q+] and [q-, p+]
    q_plus = 1.0 - d_plus * (1.0 + 1e-6)
    q_minus = d_minus * (1.0 + 1e-6)
    if not (p_minus < q_plus < 1.0 and 0.0 < q_minus < p_plus):
        raise QNotFound("q constants violate p- < q+ < 1 or 0 < q- < p+")
    return q_plus, q_minus


# ------------------------------------------------------ crossing detection

@dataclass
class ImageSamples:
    """Images of path parameters: positions, constraint margins, lifted angles."""

    xy: np.ndarray
    margins: np.ndarray
    theta: np.ndarray | None = None


Evaluator = Callable[[np.ndarray], ImageSamples]


@dataclass(frozen=True)
class Crossing:
    t0: float
    t1: float
    entry: tuple
    exit: tuple
    theta: tuple | None = None  # lifted angle at t0, midpoint, t1

    def as_dict(self) -> dict:
        out = {"t0": self.t0, "t1": self.t1, "entry": list(self.entry), "exit": list(self.exit)}
        if self.theta is not None:
            out["theta"] = list(self.theta)
        return out


@dataclass
class CrossingScan:
    crossings: list
    n_points: int
    exhausted: bool
    suspect: list  # parameter intervals that stayed unresolved


def identity_evaluator(path, rect: OrientedRect) -> Evaluator:
    def ev(sig):
        xy = path(sig) if callable(path) else np.array([path.at(s) for s in sig])
        return ImageSamples(xy, rect.margins(xy))
    return ev


def _merge(sig, samp: ImageSamples, new_sig, new: ImageSamples):
    s = np.concatenate([sig, new_sig])
    order = np.argsort(s, kind="stable")
    th = None
    if samp.theta is not None:
        th = np.concatenate([samp.theta, new.theta])[order]
    return s[order], ImageSamples(
        np.concatenate([samp.xy, new.xy])[order],
        np.concatenate([samp.margins, new.margins])[order],
        th,
    )


def _viol(m: np.ndarray, tol: float):
    """Closure flag and most-violated constraint index per sample."""
    worst = np.argmin(m, axis=1)
    ok = m[np.arange(m.shape[0]), worst] >= -tol
    return ok, np.where(ok, -1, worst)


def crossing_subpaths(evaluate: Evaluator, rect: OrientedRect, which: str = "minus", *,
                      n0: int = 257, max_points: int = 2 ** 18, jump: float = 1e-2,
                      t_tol: float = 1e-9, tol: float = BOUNDARY_TOL) -> CrossingScan:
    """Maximal parameter intervals whose image lies in `rect` with ends on its two `which` sides.

    The parameter grid is refined where the image jumps by more than `jump`
    or where neighbouring samples violate different constraints (the image
    may have slipped through the rectangle between them); ends of each run
    are then bisected to `t_tol`.
    """
    sides = rect.sides(which)
    want = {SIDE_OF_COLUMN.index(s) for s in sides}
    sig = np.linspace(0.0, 1.0, n0)
    samp = evaluate(sig)
    exhausted = False
    while True:
        ok, v = _viol(samp.margins, tol)
        d = np.hypot(*np.diff(samp.xy, axis=0).T)
        d = np.where(np.isfinite(d), d, np.inf)
        both_out = (~ok[:-1]) & (~ok[1:])
        split = (d > jump) | (both_out & (v[:-1] != v[1:])) | (ok[:-1] != ok[1:]) & (d > jump)
        split &= np.diff(sig) > t_tol
        idx = np.nonzero(split)[0]
        if idx.size == 0:
            break
        room = max_points - sig.size
        if room <= 0:
            exhausted = True
            break
        idx = idx[:room]
        new_sig = 0.5 * (sig[idx] + sig[idx + 1])
        sig, samp = _merge(sig, samp, new_sig, evaluate(new_sig))

    ok, v = _viol(samp.margins, tol)
    suspect = []
    if exhausted:
        d = np.hypot(*np.diff(samp.xy, axis=0).T)
        bad = np.nonzero((d > jump) & np.isfinite(d))[0]
        suspect = [(float(sig[i]), float(sig[i + 1])) for i in bad[:20]]

    def bisect(s_in, s_out):
        """Refine the boundary between an inside and an outside parameter."""
        v_out = None
        while abs(s_out - s_in) > t_tol:
            mid = 0.5 * (s_in + s_out)
            smp = evaluate(np.array([mid]))
            o, vv = _viol(smp.margins, tol)
            if o[0]:
                s_in = mid
            else:
                s_out, v_out = mid, int(vv[0])
        if v_out is None:
            _, vv = _viol(evaluate(np.array([s_out])).margins, tol)
            v_out = int(vv[0])
        return s_in, v_out

    def end_side(k):
        """Constraint active at an image lying in the closure (path end)."""
        m = samp.margins[k]
        j = int(np.argmin(m))
        return j if abs(m[j]) <= max(tol, 1e-9) else -1

    crossings = []
    n = sig.size
    i = 0
    while i < n:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and ok[j + 1]:
            j += 1
        if i == 0:
            t_a, side_a = 0.0, end_side(0)
        else:
            t_a, side_a = bisect(sig[i], sig[i - 1])
        if j == n - 1:
            t_b, side_b = 1.0, end_side(n - 1)
        else:
            t_b, side_b = bisect(sig[j], sig[j + 1])
        if side_a in want and side_b in want and side_a != side_b:
            th = None
            if samp.theta is not None:
                ends = evaluate(np.array([t_a, 0.5 * (t_a + t_b), t_b]))
                th = tuple(float(x) for x in ends.theta)
            crossings.append(Crossing(float(t_a), float(t_b), SIDE_OF_COLUMN[side_a], SIDE_OF_COLUMN[side_b], th))
        i = j + 1
    return CrossingScan(crossings, int(n), exhausted, suspect)

"""Time thresholds and witness-based checks of the stretching relations.

A relation (A, A^o) -> (B, B^o') is checked by pushing a handful of
spanning paths of A through the map and looking for image sub-paths that
cross B between its designated sides.  For crossing number N > 1 each
crossing is labelled by the winding class H_j of its image-time angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, GeometryError, ValidationError
from .orbits import LoopFamily
from .phase_core import (
    homoclinic_apex,
    period,
    potential,
    time_of_flight,
)
from .regions import (
    GapPath,
    ImageSamples,
    OrientedRect,
    Rects,
    crossing_subpaths,
    D,
    D_inverse,
    gap_spanning_path,
    spanning_path,
)

TWO_PI = 2.0 * math.pi
BIN_TIE = 1e-8
DEFAULT_FRACTIONS = (0.5, 0.2, 0.35, 0.65, 0.8)


# ------------------------------------------------------------ thresholds

def T1_star(a_minus: float, a_plus: float, p_minus: float, p_plus: float) -> float:
    left = 2.0 * time_of_flight(a_minus, potential(a_minus, p_minus), 0.0, p_minus)
    right = 2.0 * time_of_flight(a_plus, potential(a_plus, p_plus), p_plus, 1.0)
    return max(left, right)


def T2_star(a: float, q: float, N: int) -> float:
    """(N + 1) periods of the closed orbit of S(a) through (q, 0)."""
    if N < 1:
        raise ValidationError("N must be at least 1")
    return (N + 1) * period(a, q)


def tau_values(a_minus: float, a_plus: float, p_minus: float, p_plus: float,
               a_minus_0: float, a_plus_1: float) -> dict:
    """Tail times for the connection constructions.

    x* solves D(x) = -F_{a+}(p+) (the S(a-) homoclinic meets Theta(a+, p+));
    x** solves D(x) = F_{a-}(p-) - (1 - 2a+)/12.
    """
    fp = potential(a_plus, p_plus)
    fm = potential(a_minus, p_minus)
    try:
        x_star = D_inverse(a_minus, a_plus, -fp)
        x_2star = D_inverse(a_minus, a_plus, fm - (1.0 - 2.0 * a_plus) / 12.0)
    except Exception as exc:
        raise GeometryError(f"no first-quadrant intersection: {exc}") from exc
    if not (0.0 < x_star < homoclinic_apex(a_minus)):
        raise GeometryError("x* is not on the upper branch of the S(a-) homoclinic")
    if not (homoclinic_apex(a_plus) < x_2star < 1.0):
        raise GeometryError("x** is not on the upper branch of the S(a+) homoclinic")
    x1 = min(x_star, a_minus_0)
    x2 = max(x_2star, a_plus_1)
    try:
        tau = time_of_flight(a_plus, fp, x1, 1.0)
        tau_p = time_of_flight(a_minus, fm, 0.0, x2)
    except DomainError as exc:
        raise GeometryError(f"tail orbit turns back inside the tail interval: {exc}") from exc
    return {"x_star": x_star, "x_2star": x_2star, "x1": x1, "x2": x2, "tau": tau, "tau_prime": tau_p}


@dataclass(frozen=True)
class Thresholds:
    T1_star: float
    period_plus: float  # closed-orbit period through (q+, 0) for S(a+)
    period_minus: float  # same through (q-, 0) for S(a-)
    tau: float | None = None
    tau_prime: float | None = None

    def T2_star(self, N: int) -> float:
        if N < 1:
            raise ValidationError("N must be at least 1")
        return (N + 1) * max(self.period_plus, self.period_minus)

    def as_dict(self, M: int) -> dict:
        return {
            "T1_star": self.T1_star,
            "T2_star": self.T2_star(M),
            "period_plus": self.period_plus,
            "period_minus": self.period_minus,
            "tau": self.tau,
            "tau_prime": self.tau_prime,
        }


def eps_star(M: int, delta: float, th: Thresholds, mode: str = "chaos") -> float:
    if M < 1:
        raise ValidationError("M must be at least 1")
    if not delta > 0.0:
        raise ValidationError("delta must be positive")
    terms = [th.T1_star, th.T2_star(M)]
    if mode == "connection":
        if th.tau is None or th.tau_prime is None:
            raise ValidationError("connection mode needs tau and tau'")
        terms += [th.tau, th.tau_prime]
    elif mode != "chaos":
        raise ValidationError(f"unknown mode {mode!r}")
    return delta / max(terms)


# ------------------------------------------------------------------ maps

def _angle(xy: np.ndarray, center: float) -> np.ndarray:
    return np.arctan2(-xy[:, 1], xy[:, 0] - center)


def _normalize_start(theta: np.ndarray, halfplane: int) -> np.ndarray:
    """theta(0) in [-pi, 0] on the upper half plane and in [0, pi] on the lower."""
    lo = -math.pi if halfplane > 0 else 0.0
    return lo + np.mod(theta - lo, TWO_PI)


@dataclass(frozen=True)
class FlowMap:
    """Composition of frozen flows: stages (a, duration) applied left to right."""

    stages: tuple
    label: str = ""
    # stage whose angle gain labels the winding class; a single stage labels itself
    angle_stage: int | None = None
    angle_halfplane: int | None = None

    def __call__(self, p):
        out, _, status = _kernels.batch_propagate(np.asarray(p, float).reshape(1, 2),
                                                  [a for a, _ in self.stages], [T for _, T in self.stages])
        return out[0, -1]

    def then(self, other: "FlowMap") -> "FlowMap":
        return FlowMap(self.stages + other.stages, f"{other.label}∘{self.label}")

    def evaluator(self, path, target: OrientedRect, source_halfplane: int = 1):
        a_seq = [a for a, _ in self.stages]
        dt_seq = [T for _, T in self.stages]
        k = self.angle_stage if self.angle_stage is not None else (0 if len(self.stages) == 1 else None)
        half = self.angle_halfplane if self.angle_halfplane is not None else source_halfplane

        def ev(sig):
            xy0 = path(np.asarray(sig, float))
            out, gains, status = _kernels.batch_propagate(xy0, a_seq, dt_seq)
            img = out[:, -1, :]
            m = target.margins(img)
            m[status != 0] = -np.inf
            theta = None
            if k is not None:
                start = xy0 if k == 0 else out[:, k - 1, :]
                theta = _normalize_start(_angle(start, a_seq[k]), half) + gains[:, k]
            return ImageSamples(img, m, theta)

        return ev

    def describe(self) -> dict:
        return {"label": self.label, "stages": [{"a": a, "duration": T} for a, T in self.stages]}


@dataclass(frozen=True)
class LoopTwistMap:
    """Flow of S(a) for time T acting on gap-labelled points inside its loop.

    Used for the twist relations, where the crossings of low winding class
    live on orbits whose gap to the homoclinic level is far below double
    resolution in (x, y).
    """

    a: float
    T: float
    label: str = ""

    def as_flow(self) -> FlowMap:
        return FlowMap(((self.a, self.T),), self.label)

    def __call__(self, p):
        return self.as_flow()(p)

    def evaluator(self, path: GapPath, target: OrientedRect, source_halfplane: int = 1):
        fam = LoopFamily(self.a)
        tgt_is_a = abs(target.band_a.a - self.a) == 0.0

        def ev(sig):
            sig = np.asarray(sig, float)
            s = path.gap(sig)
            x0 = path.x_of(sig)
            u0 = np.abs(x0 - fam.saddle)
            x1, y1, gain = fam.advance(s, u0, path.branch, self.T)
            img = np.column_stack([x1, y1])
            e_t = fam.level - s
            d = D(path.a_minus, path.a_plus, x1)
            # the other system's energy differs from the target's by +-D(x)
            e_o = e_t + d if path.target_is_plus else e_t - d
            if tgt_is_a:
                m = target.margins(img, e_a=e_t, e_b=e_o)
                m[:, 0:2] = np.inf
            else:
                m = target.margins(img, e_a=e_o, e_b=e_t)
                m[:, 2:4] = np.inf
            y0 = fam.y_of(s, u0, path.branch)
            th0 = _normalize_start(_angle(np.column_stack([x0, y0]), self.a), source_halfplane)
            return ImageSamples(img, m, th0 + gain)

        return ev

    def describe(self) -> dict:
        return {"label": self.label, "stages": [{"a": self.a, "duration": self.T}], "exact_loop_motion": True}


@dataclass(frozen=True)
class TwistThenFlow:
    """Exact loop motion followed by ordinary frozen stages.

    The twist image is an ordinary point (its gap sits far above rounding
    once the turn is over), so only the first factor needs gap coordinates.
    """

    twist: LoopTwistMap
    flow: FlowMap

    @property
    def label(self) -> str:
        return f"{self.flow.label}∘{self.twist.label}"

    def as_flow(self) -> FlowMap:
        return self.twist.as_flow().then(self.flow)

    def __call__(self, p):
        return self.as_flow()(p)

    def evaluator(self, path: GapPath, target: OrientedRect, source_halfplane: int = 1):
        fam = LoopFamily(self.twist.a)
        a_seq = [a for a, _ in self.flow.stages]
        dt_seq = [T for _, T in self.flow.stages]

        def ev(sig):
            sig = np.asarray(sig, float)
            s = path.gap(sig)
            x0 = path.x_of(sig)
            u0 = np.abs(x0 - fam.saddle)
            x1, y1, gain = fam.advance(s, u0, path.branch, self.twist.T)
            out, _, status = _kernels.batch_propagate(np.column_stack([x1, y1]), a_seq, dt_seq)
            img = out[:, -1, :]
            m = target.margins(img)
            m[status != 0] = -np.inf
            y0 = fam.y_of(s, u0, path.branch)
            th0 = _normalize_start(_angle(np.column_stack([x0, y0]), self.twist.a), source_halfplane)
            return ImageSamples(img, m, th0 + gain)

        return ev

    def describe(self) -> dict:
        return {"label": self.label, "stages": [{"a": self.twist.a, "duration": self.twist.T}]
                + [{"a": a, "duration": T} for a, T in self.flow.stages], "exact_loop_motion": True}


# --------------------------------------------------------------- reports

def winding_class(theta: float, halfplane: int) -> tuple[int | None, bool]:
    """(j, tie) with theta - offset in [(2j-1)pi, 2j pi]; offset pi on the lower half plane."""
    v = theta - (0.0 if halfplane > 0 else math.pi)
    k = v / math.pi
    j = math.ceil(k / 2.0)
    in_bin = (2 * j - 1) <= k <= 2 * j
    near_edge = min(abs(v - (2 * j - 1) * math.pi), abs(v - 2 * j * math.pi)) <= BIN_TIE
    return (j if in_bin else None), near_edge


@dataclass
class PathWitness:
    index: int
    path: dict
    n_points: int
    crossings: list
    classes: list
    exhausted: bool
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "path": self.path,
            "n_points": self.n_points,
            "crossings": [dict(c.as_dict(), H_class=j) for c, j in zip(self.crossings, self.classes)],
            "exhausted": self.exhausted,
            "note": self.note,
        }


@dataclass
class StretchReport:
    relation: dict
    crossing_number_requested: int
    witnesses: list = field(default_factory=list)
    passed: bool = False
    status: str = "fail"

    def as_dict(self) -> dict:
        return {
            "relation": self.relation,
            "crossing_number_requested": self.crossing_number_requested,
            "passed": self.passed,
            "status": self.status,
            "witnesses": [w.as_dict() for w in self.witnesses],
        }


def _path_meta(p) -> dict:
    if isinstance(p, GapPath):
        return {"kind": "gap", "a_trace": p.a_trace, "c": p.c, "s_max": p.s_max, "branch": p.branch}
    return {"kind": "level", "a": p.a, "c": p.c, "x0": p.x0, "x1": p.x1, "branch": p.branch}


def source_paths(rects: Rects, label: str, side: str, budget: int, exact: bool):
    fr = DEFAULT_FRACTIONS[:budget] if budget <= len(DEFAULT_FRACTIONS) else np.linspace(0.1, 0.9, budget)
    if exact:
        return [gap_spanning_path(rects, label, float(f)) for f in fr]
    return [spanning_path(rects, label, side, float(f)) for f in fr]


def verify_stretch(fmap, rects: Rects, source: str, source_side: str, target: str, target_side: str,
                   N: int = 1, path_budget: int = 5, max_points: int = 2 ** 18,
                   t_tol: float = 1e-9) -> StretchReport:
    """Witness check of fmap: (source, source_side) -> (target, target_side) with crossing number N."""
    if N < 1:
        raise ValidationError("N must be at least 1")
    src = rects.by_label(source)
    tgt = rects.by_label(target)
    exact = isinstance(fmap, (LoopTwistMap, TwistThenFlow))
    paths = source_paths(rects, source, source_side, path_budget, exact)
    rel = {
        "map": fmap.describe(),
        "source": source, "source_side": source_side,
        "target": target, "target_side": target_side,
        "designated_sides": [list(s) for s in tgt.sides(target_side)],
    }
    report = StretchReport(rel, N)
    all_ok = True
    inconclusive = False
    for i, p in enumerate(paths):
        ev = fmap.evaluator(p, tgt, src.halfplane)
        scan = crossing_subpaths(ev, tgt, target_side, max_points=max_points, t_tol=t_tol)
        classes, note, tie = [], "", False
        for c in scan.crossings:
            if c.theta is None:
                classes.append(None)
                continue
            j, t_mid = winding_class(c.theta[1], tgt.halfplane)
            ends = [winding_class(th, tgt.halfplane)[0] for th in (c.theta[0], c.theta[2])]
            if t_mid or (j is not None and any(e not in (j, None) for e in ends)):
                tie = True
            classes.append(j)
        if N == 1:
            ok = len(scan.crossings) >= 1
        else:
            ok = set(range(1, N + 1)) <= {j for j in classes if j is not None}
        if tie:
            note = "winding class tie at a bin edge"
        if not ok and (scan.exhausted or tie):
            inconclusive = True
            note = note or "refinement budget exhausted"
        all_ok &= ok
        report.witnesses.append(PathWitness(i, _path_meta(p), scan.n_points, scan.crossings, classes,
                                            scan.exhausted, note))
    report.passed = bool(all_ok)
    report.status = "pass" if all_ok else ("inconclusive" if inconclusive else "fail")
    return report


def verify_composition(first: StretchReport, second: StretchReport, fmap_first, fmap_second,
                       rects: Rects, path_budget: int = 5, t_tol: float = 1e-13) -> StretchReport:
    """Check the composed map with crossing number equal to the product."""
    r1, r2 = first.relation, second.relation
    if (r1["target"], r1["target_side"]) != (r2["source"], r2["source_side"]):
        raise ValidationError("target of the first relation must be the source of the second")
    N = first.crossing_number_requested * second.crossing_number_requested
    if isinstance(fmap_first, LoopTwistMap) and isinstance(fmap_second, FlowMap):
        composed = TwistThenFlow(fmap_first, fmap_second)
    else:
        f1 = fmap_first.as_flow() if isinstance(fmap_first, LoopTwistMap) else fmap_first
        f2 = fmap_second.as_flow() if isinstance(fmap_second, LoopTwistMap) else fmap_second
        k = len(f1.stages) if second.crossing_number_requested > 1 else None
        composed = FlowMap(f1.stages + f2.stages, f"{f2.label}∘{f1.label}", angle_stage=k,
                           angle_halfplane=rects.by_label(r2["source"]).halfplane)
    rep = verify_stretch(composed, rects, r1["source"], r1["source_side"], r2["target"], r2["target_side"],
                         N=N, path_budget=path_budget, t_tol=t_tol)
    rep.relation["factors"] = [first.passed, second.passed]
    rep.passed = rep.passed and first.passed and second.passed
    rep.status = "pass" if rep.passed else rep.status
    return rep


# ---------------------------------------------------------- relation set

@dataclass(frozen=True)
class Relation:
    name: str
    fmap: object
    source: str
    source_side: str
    target: str
    target_side: str
    N: int


def standard_relations(a_minus: float, a_plus: float, T1: float, T2: float, N: int) -> list[Relation]:
    """The four transfer relations at T1 and the two twist relations at T2."""
    Fm = lambda T, lab: FlowMap(((a_minus, T),), lab)
    Fp = lambda T, lab: FlowMap(((a_plus, T),), lab)
    return [
        Relation("R1->R2", Fm(T1, "Psi_-^T1"), "R1", "minus", "R2", "minus", 1),
        Relation("R2->R3", Fm(T1, "Psi_-^T1"), "R2", "plus", "R3", "minus", 1),
        Relation("R3->R4", Fp(T1, "Psi_+^T1"), "R3", "minus", "R4", "minus", 1),
        Relation("R4->R1", Fp(T1, "Psi_+^T1"), "R4", "plus", "R1", "minus", 1),
        Relation("R2->R2", LoopTwistMap(a_plus, T2, "Psi_+^T2"), "R2", "minus", "R2", "plus", N),
        Relation("R4->R4", LoopTwistMap(a_minus, T2, "Psi_-^T2"), "R4", "minus", "R4", "plus", N),
    ]


def run_relation(rel: Relation, rects: Rects, path_budget: int = 5) -> StretchReport:
    rep = verify_stretch(rel.fmap, rects, rel.source, rel.source_side, rel.target, rel.target_side,
                         N=rel.N, path_budget=path_budget)
    rep.relation["name"] = rel.name
    return rep

"""Finite itineraries: nested sub-path selection, periodic points, validation.

A block k covers six constant-weight stages [t_6k, t_6k+6]:

    stage  weight  relation
    0      a-      R1 (minus) -> R2 (minus)
    1      a+      R2 (minus) -> R2 (plus), n+ turns
    2      a-      R2 (plus)  -> R3 (minus)
    3      a+      R3 (minus) -> R4 (minus)
    4      a-      R4 (minus) -> R4 (plus), n- turns
    5      a+      R4 (plus)  -> R1 (minus)

Selection keeps, at every stage, one parameter interval of the source path
whose image crosses the target rectangle between its designated sides.
Parameters always refer to the original source path; each evaluation
re-integrates from the start.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    AmbiguousTurnCount,
    FixedPointNotFound,
    GeometryError,
    IntegrationError,
    InvalidItinerary,
    NagumoError,
    RealizationFailed,
    ThresholdViolation,
    ValidationError,
)
from .flow import StepProfile, Trajectory, count_turns, integrate
from .manifolds import GraphWindows, graph_window
from .paths import PhasePoint
from .phase_core import period
from .regions import (
    ImageSamples,
    RectConstants,
    Rects,
    Status,
    build_rects,
    choose_p,
    compute_q,
    crossing_subpaths,
    spanning_path,
)
from .stretch import Thresholds, T1_star, eps_star, tau_values, winding_class

T1_FACTOR = 1.1


# --------------------------------------------------------------- geometry

@dataclass(frozen=True)
class Geometry:
    """Rectangles and thresholds shared by all constructions for one (a-, a+)."""

    a_minus: float
    a_plus: float
    T1: float
    rects: Rects
    thresholds: Thresholds
    windows: GraphWindows
    tails: dict  # x*, x**, x1, x2, tau, tau'

    def describe(self) -> dict:
        return {"T1": self.T1, "rects": self.rects.describe(), "graph_windows": {
            "a_minus_0": self.windows.a_minus_0, "a_plus_1": self.windows.a_plus_1}, "tails": dict(self.tails)}


@functools.lru_cache(maxsize=16)
def analyze(a_minus: float, a_plus: float, T1_factor: float = T1_FACTOR) -> Geometry:
    pm, pp = choose_p(a_minus, a_plus)
    t1s = T1_star(a_minus, a_plus, pm, pp)
    T1 = T1_factor * t1s
    qp, qm = compute_q(a_minus, a_plus, pm, pp, T1)
    rects = build_rects(a_minus, a_plus, RectConstants(pm, pp, qp, qm))
    win = graph_window(a_minus, a_plus)
    try:
        tails = tau_values(a_minus, a_plus, pm, pp, win.a_minus_0, win.a_plus_1)
    except GeometryError as exc:
        # chaos still works; connection mode then refuses to resolve eps*
        tails = {"x_star": None, "x_2star": None, "x1": None, "x2": None, "tau": None, "tau_prime": None,
                 "error": str(exc)}
    th = Thresholds(t1s, period(a_plus, qp), period(a_minus, qm), tails["tau"], tails["tau_prime"])
    return Geometry(a_minus, a_plus, T1, rects, th, win, tails)


# ------------------------------------------------------------- itineraries

@dataclass(frozen=True)
class Itinerary:
    blocks: tuple  # ((n_plus, n_minus), ...)
    M: int

    def __post_init__(self):
        blocks = tuple((int(p), int(m)) for p, m in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not (isinstance(self.M, (int, np.integer)) and self.M >= 1):
            raise InvalidItinerary("M must be a positive integer")
        for j, (p, m) in enumerate(blocks, 1):
            if not (1 <= p <= self.M and 1 <= m <= self.M):
                raise InvalidItinerary(f"block {j}: turn counts ({p}, {m}) outside 1..{self.M}")

    @classmethod
    def of(cls, pairs, M: int | None = None) -> "Itinerary":
        pairs = [tuple(p) for p in pairs]
        for p in pairs:
            if len(p) != 2:
                raise InvalidItinerary("itinerary entries must be [n_plus, n_minus] pairs")
        if M is None:
            M = max([max(p) for p in pairs], default=1)
        return cls(tuple(pairs), int(M))

    @classmethod
    def from_json(cls, text: str, M: int | None = None) -> "Itinerary":
        return cls.of(json.loads(text), M)

    @property
    def K(self) -> int:
        return len(self.blocks)

    def repeat(self, m: int) -> "Itinerary":
        return Itinerary(self.blocks * m, self.M)

    def as_list(self) -> list:
        return [list(b) for b in self.blocks]


@dataclass(frozen=True)
class BlockWindows:
    """I_j, I_j+ and I_j- for blocks j = first .. first + K - 1 (s-units)."""

    profile: StepProfile
    K: int
    first: int = 1

    def __post_init__(self):
        need = (6 * (self.first - 1), 6 * (self.first - 1 + self.K))
        if self.K > 0 and (need[0] < self.profile.first_index or need[1] > self.profile.last_index):
            raise ValidationError("profile does not contain the requested blocks")

    def s_windows(self, j: int) -> dict:
        s = self.profile.s
        return {"I": (s(6 * (j - 1)), s(6 * j)), "I_plus": (s(6 * j - 5), s(6 * j - 4)),
                "I_minus": (s(6 * j - 2), s(6 * j - 1))}

    def t_windows(self, j: int) -> dict:
        e = self.profile.epsilon
        return {k: (a / e, b / e) for k, (a, b) in self.s_windows(j).items()}

    def blocks(self):
        return range(self.first, self.first + self.K)


# ------------------------------------------------------------------ stages

@dataclass(frozen=True)
class StageSpec:
    index: int  # switch index k of the stage start
    a: float
    duration: float
    source: str
    source_side: str
    target: str
    target_side: str
    turns: int | None  # requested winding class on twist stages

    def describe(self) -> dict:
        return {"k": self.index, "a": self.a, "duration": self.duration, "source": self.source,
                "source_side": self.source_side, "target": self.target, "target_side": self.target_side,
                "turns": self.turns}


_PLAN = (
    ("R1", "minus", "R2", "minus", None),
    ("R2", "minus", "R2", "plus", "plus"),
    ("R2", "plus", "R3", "minus", None),
    ("R3", "minus", "R4", "minus", None),
    ("R4", "minus", "R4", "plus", "minus"),
    ("R4", "plus", "R1", "minus", None),
)


def block_stages(profile: StepProfile, block: int, n: tuple[int, int]) -> list[StageSpec]:
    """The six stages of block j (1-based) with requested turns n = (n+, n-)."""
    out = []
    for r, (src, ss, tgt, ts, twist) in enumerate(_PLAN):
        k = 6 * (block - 1) + r
        turns = None if twist is None else (n[0] if twist == "plus" else n[1])
        out.append(StageSpec(k, profile.a_of_index(k), profile.t(k + 1) - profile.t(k), src, ss, tgt, ts, turns))
    return out


def itinerary_stages(profile: StepProfile, itin: Itinerary, first_block: int = 1) -> list[StageSpec]:
    st = []
    for j, n in enumerate(itin.blocks, first_block):
        st += block_stages(profile, j, n)
    return st


def _angle(xy: np.ndarray, center: float) -> np.ndarray:
    return np.arctan2(-xy[:, 1], xy[:, 0] - center)


def _normalize_start(theta: np.ndarray, halfplane: int) -> np.ndarray:
    lo = -math.pi if halfplane > 0 else 0.0
    return lo + np.mod(theta - lo, 2.0 * math.pi)


@dataclass
class StageLog:
    stage: StageSpec
    interval: tuple
    n_points: int
    crossings: int
    classes: list
    chosen: dict | None
    exhausted: bool

    def as_dict(self) -> dict:
        return {"stage": self.stage.describe(), "interval": list(self.interval), "n_points": self.n_points,
                "crossings": self.crossings, "classes": self.classes, "chosen": self.chosen,
                "exhausted": self.exhausted}


class NestedSelection:
    """Nested sub-path selection along a sequence of stages.

    ``base`` maps parameters sigma in [0, 1] to points at the start time;
    ``prefix`` stages (a, duration) are applied before the first selected
    stage.
    """

    def __init__(self, base, prefix: tuple, rects: Rects, *, max_points: int = 2 ** 16, atol: float = 1e-15):
        self.base = base
        self.prefix = tuple(prefix)
        self.rects = rects
        self.max_points = max_points
        self.atol = atol
        self.log: list[StageLog] = []

    def images(self, sig, stages: list[StageSpec]):
        xy0 = self.base(np.asarray(sig, float))
        seq = list(self.prefix) + [(s.a, s.duration) for s in stages]
        if not seq:
            return xy0[:, None, :], np.zeros((xy0.shape[0], 0)), np.zeros(xy0.shape[0], int)
        return _kernels.batch_propagate(xy0, [a for a, _ in seq], [T for _, T in seq], atol=self.atol)

    def _evaluator(self, stages: list[StageSpec], lo: float, hi: float):
        tgt = self.rects.by_label(stages[-1].target)
        last = stages[-1]
        src_half = self.rects.by_label(last.source).halfplane
        n_pre = len(self.prefix)

        def ev(tau):
            sig = lo + np.asarray(tau, float) * (hi - lo)
            out, gains, status = self.images(sig, stages)
            img = out[:, -1, :]
            m = tgt.margins(img)
            m[status != 0] = -np.inf
            pos = n_pre + len(stages) - 1
            start = out[:, pos - 1, :] if pos > 0 else self.base(sig)
            th = _normalize_start(_angle(start, last.a), src_half) + gains[:, pos]
            return ImageSamples(img, m, th)

        return ev

    def select(self, stages: list[StageSpec], lo: float = 0.0, hi: float = 1.0) -> tuple[float, float]:
        done: list[StageSpec] = []
        for st in stages:
            done.append(st)
            tgt = self.rects.by_label(st.target)
            if tgt is None:
                raise RealizationFailed(f"rectangle {st.target} is not available", (lo, hi), st.index)
            scan = crossing_subpaths(self._evaluator(done, lo, hi), tgt, st.target_side, max_points=self.max_points)
            classes = []
            for c in scan.crossings:
                j, _ = winding_class(c.theta[1], tgt.halfplane) if c.theta is not None else (None, False)
                classes.append(j)
            # smallest left endpoint among admissible crossings
            pick = None
            for c, j in zip(scan.crossings, classes):
                if st.turns is None or j == st.turns:
                    pick = c
                    break
            chosen = None
            if pick is not None:
                chosen = dict(pick.as_dict(), sigma=[lo + pick.t0 * (hi - lo), lo + pick.t1 * (hi - lo)])
            self.log.append(StageLog(st, (lo, hi), scan.n_points, len(scan.crossings), classes, chosen,
                                     scan.exhausted))
            if pick is None:
                what = "crossing" if st.turns is None else f"crossing in class H_{st.turns}"
                raise RealizationFailed(f"stage k={st.index} ({st.source}->{st.target}): no {what} found "
                                        f"(parameter interval width {hi - lo:.3g})", (lo, hi), st.index)
            new_lo, new_hi = lo + pick.t0 * (hi - lo), lo + pick.t1 * (hi - lo)
            if not (new_hi > new_lo) or new_hi - new_lo <= 8 * np.finfo(float).eps * max(abs(new_lo), 1e-300):
                raise RealizationFailed(f"stage k={st.index}: parameter interval below double resolution",
                                        (new_lo, new_hi), st.index)
            lo, hi = new_lo, new_hi
        return lo, hi


# ------------------------------------------------------------------ results

@dataclass
class RealizationResult:
    initial_point: PhasePoint
    t_start: float
    trajectory: Trajectory
    itinerary: Itinerary
    achieved: list  # [(n+, n-)] per block
    certificate: list  # R1 membership at each t_6k
    interval: tuple
    stages: list = field(default_factory=list)
    validation: dict | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "initial_point": [self.initial_point.x, self.initial_point.y],
            "t_start": self.t_start,
            "itinerary": self.itinerary.as_list(),
            "achieved": [list(a) for a in self.achieved],
            "certificate": self.certificate,
            "parameter_interval": list(self.interval),
            "stages": [s.as_dict() for s in self.stages],
            "validation": self.validation,
            **self.extra,
        }


def _check_threshold(profile: StepProfile, M: int, geom: Geometry, mode: str) -> float:
    e_star = eps_star(M, profile.delta, geom.thresholds, mode)
    if not profile.epsilon < e_star:
        raise ThresholdViolation(f"epsilon {profile.epsilon:.6g} is not below eps*({M}) = {e_star:.6g} ({mode})")
    return e_star


def _achieved(traj: Trajectory, profile: StepProfile, K: int, first: int = 1) -> list:
    bw = BlockWindows(profile, K, first)
    out = []
    for j in bw.blocks():
        w = bw.t_windows(j)
        pair = []
        for key in ("I_plus", "I_minus"):
            try:
                pair.append(count_turns(traj, w[key]).turns)
            except AmbiguousTurnCount:
                pair.append(None)
        out.append(tuple(pair))
    return out


def _certificate(traj: Trajectory, profile: StepProfile, rects: Rects, K: int, first: int = 1) -> list:
    cert = []
    for k in range(first - 1, first - 1 + K + 1):
        t = profile.t(6 * k)
        p = traj(t)
        cert.append({"k": k, "t": t, "point": [float(p[0]), float(p[1])],
                     "status": Status(int(rects.R1.classify(p[None, :])[0][0])).name})
    return cert


def realize_finite(profile: StepProfile, itinerary, *, M: int | None = None, geometry: Geometry | None = None,
                   first_block: int = 1, source_fraction: float = 0.5, max_points: int = 2 ** 16) -> RealizationResult:
    """Initial point at t_6(first-1) whose solution follows the itinerary block by block."""
    itin = itinerary if isinstance(itinerary, Itinerary) else Itinerary.of(itinerary, M)
    if itin.K < 1:
        raise InvalidItinerary("realize_finite needs at least one block")
    geom = geometry or analyze(profile.a_minus, profile.a_plus)
    _check_threshold(profile, itin.M, geom, "chaos")
    BlockWindows(profile, itin.K, first_block)
    stages = itinerary_stages(profile, itin, first_block)
    source = spanning_path(geom.rects, "R1", "minus", source_fraction)
    sel = NestedSelection(source, (), geom.rects, max_points=max_points)
    lo, hi = sel.select(stages)
    sig = 0.5 * (lo + hi)
    p0 = source(np.array([sig]))[0]
    t0 = profile.t(6 * (first_block - 1))
    traj = integrate(profile, p0, t0, profile.t(6 * (first_block - 1 + itin.K)))
    res = RealizationResult(PhasePoint.of(p0), t0, traj, itin, _achieved(traj, profile, itin.K, first_block),
                            _certificate(traj, profile, geom.rects, itin.K, first_block), (lo, hi), sel.log)
    res.validation = validate(res, itin, profile=profile, geometry=geom, first_block=first_block)
    return res


# ------------------------------------------------------------------ validation

def validate(result: RealizationResult, itinerary: Itinerary, *, profile: StepProfile,
             geometry: Geometry | None = None, first_block: int = 1) -> dict:
    """Zero counts of x' in every I_j+-, containment 0 < x < 1, R1 membership at t_6k."""
    itin = itinerary
    if itin.K == 0:
        return {"passed": True, "blocks": [], "containment": True, "rects": True, "note": "no blocks"}
    geom = geometry or analyze(profile.a_minus, profile.a_plus)
    traj = result.trajectory
    bw = BlockWindows(profile, itin.K, first_block)
    blocks, ok = [], True
    for j, (n_p, n_m) in zip(bw.blocks(), itin.blocks):
        w = bw.t_windows(j)
        entry = {"j": j}
        for key, n in (("I_plus", n_p), ("I_minus", n_m)):
            try:
                tc = count_turns(traj, w[key])
                zeros = len(tc.zeros)
                good = zeros == 2 * n
            except AmbiguousTurnCount as exc:
                zeros, good = None, False
                entry[key + "_note"] = str(exc)
            entry[key] = {"zeros": zeros, "expected": 2 * n, "ok": good}
            ok &= good
        blocks.append(entry)
    t_lo, t_hi = profile.t(6 * (first_block - 1)), profile.t(6 * (first_block - 1 + itin.K))
    _, zz = traj.dense_samples(4)
    tt, _ = traj.dense_samples(4)
    mask = (tt >= t_lo) & (tt <= t_hi)
    xs = zz[mask, 0]
    inside = bool(np.all((xs > 0.0) & (xs < 1.0)))
    cert = _certificate(traj, profile, geom.rects, itin.K, first_block)
    rect_ok = all(c["status"] != "OUTSIDE" for c in cert)
    return {"passed": bool(ok and inside and rect_ok), "blocks": blocks, "containment": inside,
            "x_range": [float(xs.min()), float(xs.max())], "rects": rect_ok, "certificate": cert}


# ------------------------------------------------------------------ periodic

def _is_six_periodic(profile: StepProfile) -> bool:
    g = np.diff(profile.switch_times)
    if g.size < 6:
        return False
    for r in range(6):
        ks = np.arange(profile.first_index, profile.last_index)
        sel = g[(ks % 6) == r]
        if sel.size and np.max(np.abs(sel - sel[0])) > 1e-12 * max(1.0, abs(sel[0])):
            return False
    return True


@dataclass
class PeriodicResult:
    realization: RealizationResult | None
    fixed_point: PhasePoint
    residual: float
    period_t: float
    shift_distance: float | None
    iterations: int
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "fixed_point": [self.fixed_point.x, self.fixed_point.y],
            "residual": self.residual,
            "period_t": self.period_t,
            "shift_distance": self.shift_distance,
            "newton_iterations": self.iterations,
            "notes": self.notes,
            "realization": self.realization.as_dict() if self.realization else None,
        }


def _period_map(profile: StepProfile, ell: int, first_block: int = 1):
    k0 = 6 * (first_block - 1)
    seq = [(profile.a_of_index(k), profile.t(k + 1) - profile.t(k)) for k in range(k0, k0 + 6 * ell)]
    a_seq = [a for a, _ in seq]
    dt_seq = [T for _, T in seq]

    def phi(xy):
        out, _, status = _kernels.batch_propagate(np.atleast_2d(xy), a_seq, dt_seq)
        if np.any(status != 0):
            raise IntegrationError("period map integration failed")
        return out[:, -1, :]

    return phi


def newton_fixed_point(phi, p0, *, h: float = 1e-7, tol: float = 1e-10, max_iter: int = 40):
    """Damped Newton on phi(p) - p with forward-difference Jacobians."""
    p = np.asarray(p0, float)
    r = phi(p)[0] - p
    it = 0
    for it in range(1, max_iter + 1):
        if np.hypot(*r) < tol:
            break
        pts = np.array([p, p + [h, 0.0], p + [0.0, h]])
        img = phi(pts)
        J = np.column_stack([(img[1] - img[0]) / h, (img[2] - img[0]) / h]) - np.eye(2)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        rn = np.hypot(*r)
        while lam > 1e-6:
            cand = p + lam * step
            rc = phi(cand)[0] - cand
            if np.all(np.isfinite(rc)) and np.hypot(*rc) < rn:
                p, r = cand, rc
                break
            lam *= 0.5
        else:
            break
    return p, float(np.hypot(*r)), it


def periodic_solution(profile: StepProfile, itinerary, *, M: int | None = None, geometry: Geometry | None = None,
                      max_repeat: int = 3, residual_tol: float = 1e-8) -> PeriodicResult:
    """Fixed point of the ell-block map realizing an ell-periodic itinerary."""
    itin = itinerary if isinstance(itinerary, Itinerary) else Itinerary.of(itinerary, M)
    if itin.K < 1:
        raise InvalidItinerary("periodic_solution needs at least one block")
    if not _is_six_periodic(profile):
        raise ValidationError("switching gaps must be 6-periodic")
    geom = geometry or analyze(profile.a_minus, profile.a_plus)
    _check_threshold(profile, itin.M, geom, "chaos")
    ell = itin.K
    phi = _period_map(profile, ell)
    notes = []
    last_exc: NagumoError | None = None
    for m in range(1, max_repeat + 1):
        try:
            res = realize_finite(profile, itin.repeat(m), geometry=geom)
        except (RealizationFailed, ValidationError) as exc:
            notes.append(f"seed over {m * ell} blocks failed: {exc}")
            last_exc = exc
            continue
        seed = res.initial_point.as_array()
        p, resid, it = newton_fixed_point(phi, seed)
        if resid < residual_tol and geom.rects.R1.contains(p) != Status.OUTSIDE:
            P = profile.t(6 * ell) - profile.t(0)
            shift = None
            if profile.last_index >= 12 * ell:
                traj = integrate(profile, p, profile.t(0), profile.t(12 * ell))
                ts = np.linspace(profile.t(0), profile.t(6 * ell), 2001)
                shift = float(np.max(np.hypot(*(traj(ts + P) - traj(ts)).T)))
            real = res
            try:
                traj1 = integrate(profile, p, profile.t(0), profile.t(6 * ell))
                real = RealizationResult(PhasePoint.of(p), profile.t(0), traj1, itin,
                                         _achieved(traj1, profile, ell), _certificate(traj1, profile, geom.rects, ell),
                                         res.interval, res.stages)
                real.validation = validate(real, itin, profile=profile, geometry=geom)
            except NagumoError as exc:
                notes.append(f"validation of the fixed point failed: {exc}")
            return PeriodicResult(real, PhasePoint.of(p), resid, P, shift, it, notes)
        notes.append(f"Newton from the {m * ell}-block seed stalled at residual {resid:.3g}")
    raise FixedPointNotFound("; ".join(notes) or "no fixed point found") from last_exc

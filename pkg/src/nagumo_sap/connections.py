"""Heteroclinic and homoclinic solutions by intersecting carried continua.

The unstable continuum of (0, 0) at t_-1, pushed by the a+ flow to t_0, is
a path through (R1, R1-).  After the K blocks of the itinerary the surviving
part is intersected at t_6K with the pullback (by the a- flow) of the stable
continuum taken at t_6K+1.  Both sides keep their seed parameters, so the
solution is rebuilt by integrating each half from its own seed; near the
saddles the integration runs with a negligible absolute tolerance so that
offsets like 1e-40 keep full relative precision.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConnectionNotFound, NagumoError, RealizationFailed
from .flow import Segment, StepProfile, Trajectory, integrate, profile_stages, xprime_zeros
from .itinerary import (
    Geometry,
    Itinerary,
    NestedSelection,
    RealizationResult,
    _achieved,
    _certificate,
    _check_threshold,
    analyze,
    itinerary_stages,
)
from .manifolds import (
    ManifoldGraph,
    intersect_paths,
    refine_crossing,
    saddle_exponent,
    stable_continuum,
    unstable_continuum,
)
from .paths import PhasePoint, PlanarPath
from .phase_core import potential
from .regions import ImageSamples, crossing_subpaths

TINY_ATOL = 1e-250
ETA_RATE = 10.0
RESIDUAL_TOL = 1e-4
DECAY_TOL = 0.1
DRIFT_TOL = 1e-9
# the carried paths meet on the boundary of R1, within rounding of its corner
WIDEN = 0.02


class ConnectionKind(str, enum.Enum):
    HETEROCLINIC = "heteroclinic"
    HOMOCLINIC = "homoclinic"

    @property
    def terminal(self) -> int:
        return 1 if self is ConnectionKind.HETEROCLINIC else 0


# ------------------------------------------------------------ carried curves

@dataclass(frozen=True)
class CarriedCurve:
    """sigma in [0, 1) -> points of a continuum moved by `extra` stages.

    sigma = 0 is the edge of the graph window, sigma -> 1 the equilibrium.
    """

    graph: ManifoldGraph
    extra: tuple
    eta_edge: float
    rate: float = ETA_RATE

    def eta(self, sig):
        sig = np.asarray(sig, float)
        with np.errstate(divide="ignore"):
            return self.eta_edge + self.rate * sig / (1.0 - sig)

    def __call__(self, sig) -> np.ndarray:
        return self.graph.chain.carry(self.eta(sig), self.extra, TINY_ATOL)


def _edge_eta(graph: ManifoldGraph, edge_x: float) -> float:
    """Seed parameter where the continuum meets x = edge_x inside its graph window."""
    chain = graph.chain
    local_edge = edge_x if chain.kind.equilibrium == 0 else 1.0 - edge_x
    dist = np.abs(graph.curve.xy[:, 0] - chain.kind.equilibrium)
    k = int(np.searchsorted(dist, local_edge))
    if k >= dist.size:
        return float(graph.eta[-1])
    lo = float(graph.eta[k])
    hi = float(graph.eta[k - 1]) if k > 1 else lo + 60.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if chain.carry_local([mid], (), TINY_ATOL)[0, 0] > local_edge:
            lo = mid
        else:
            hi = mid
    return hi


def _reach_eta(graph: ManifoldGraph, edge: float, span: float = 40.0, n: int = 801) -> float:
    """Largest seed parameter whose image reaches outward distance `edge` (past the graph window)."""
    chain = graph.chain
    top = float(graph.eta[-1])
    grid = np.linspace(top, top - span, n)
    dist = chain.carry_local(grid, (), TINY_ATOL)[:, 0]
    hit = np.nonzero(dist >= edge)[0]
    if hit.size == 0:
        return float(grid[-1])
    k = int(hit[0])
    if k == 0:
        return top
    lo, hi = float(grid[k]), float(grid[k - 1])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if chain.carry_local([mid], (), TINY_ATOL)[0, 0] >= edge:
            lo = mid
        else:
            hi = mid
    return hi


def _widen(lo: float, hi: float, frac: float = WIDEN) -> tuple[float, float]:
    w = frac * (hi - lo)
    return max(0.0, lo - w), min(hi + w, 0.5 * (hi + 1.0))


def _curve_evaluator(curve: CarriedCurve, rect):
    def ev(sig):
        img = curve(sig)
        return ImageSamples(img, rect.margins(img))
    return ev


def _select(curve: CarriedCurve, rect, side: str, what: str):
    scan = crossing_subpaths(_curve_evaluator(curve, rect), rect, side, n0=513, max_points=2 ** 16)
    if not scan.crossings:
        raise ConnectionNotFound(f"{what}: carried continuum does not cross R1 between its {side} sides")
    c = scan.crossings[0]
    return (c.t0, c.t1), scan


def _polyline(f, lo: float, hi: float, h: float = 2e-3, n0: int = 513, max_points: int = 2 ** 15) -> PlanarPath:
    sig = np.linspace(lo, hi, n0)
    pts = f(sig)
    for _ in range(30):
        gaps = np.hypot(*np.diff(pts, axis=0).T)
        bad = np.nonzero(gaps > h)[0]
        if bad.size == 0 or sig.size + bad.size > max_points:
            break
        new = 0.5 * (sig[bad] + sig[bad + 1])
        sig = np.insert(sig, bad + 1, new)
        pts = np.insert(pts, bad + 1, f(new), axis=0)
    return PlanarPath(sig, pts)


# ------------------------------------------------------------ trajectories

@dataclass(frozen=True)
class _MirroredProfile:
    """Weights of the reflected equation (x, y) -> (1 - x, -y)."""

    profile: object

    def segments(self, t0, t1):
        return [(1.0 - a, s, e) for a, s, e in self.profile.segments(t0, t1)]


def _mirror_state(z):
    z = np.asarray(z, float)
    return np.stack([1.0 - z[0], -z[1]]) if z.ndim > 1 else np.array([1.0 - z[0], -z[1]])


def _mirror_traj(traj: Trajectory) -> Trajectory:
    segs = []
    for s in traj.segments:
        sol = s.sol
        segs.append(Segment(1.0 - s.a, s.t0, s.t1, (lambda t, f=sol: _mirror_state(f(t))), s.ts,
                            np.column_stack([1.0 - s.zs[:, 0], -s.zs[:, 1]])))
    return Trajectory(tuple(segs), traj.direction)


def _half(profile, graph: ManifoldGraph, eta: float, t_end: float) -> Trajectory:
    """Local-frame trajectory from the seed with parameter eta to t_end."""
    chain = graph.chain
    seed = chain.seeds_local([eta])[0]
    system = _MirroredProfile(profile) if chain.mirrored else profile
    return integrate(system, seed, chain.seed_time, t_end, atol=TINY_ATOL)


def _energy_drift(traj: Trajectory) -> float:
    worst = 0.0
    for s in traj.segments:
        e = 0.5 * s.zs[:, 1] ** 2 + potential(s.a, s.zs[:, 0])
        worst = max(worst, float(e.max() - e.min()))
    return worst


def _decay_fit(local: Trajectory, seg: Segment, mirrored: bool, equilibrium: int) -> dict:
    """Exponential rate of the distance to the saddle on the constant piece `seg`."""
    tt, zz = local.dense_samples(4)
    m = (tt >= seg.t0) & (tt <= seg.t1)
    d = np.hypot(zz[m, 0], zz[m, 1])
    t = tt[m]
    keep = (d > 0.0) & (d < 1e-3)
    a = 1.0 - seg.a if mirrored else seg.a
    expected = saddle_exponent(a, equilibrium)
    out = {"a": a, "equilibrium": equilibrium, "expected": expected}
    if keep.sum() < 8:
        return dict(out, fitted=None, relative_error=None, ok=False, note="too few samples near the equilibrium")
    slope = float(np.polyfit(t[keep], np.log(d[keep]), 1)[0])
    rel = abs(abs(slope) - expected) / expected
    return dict(out, fitted=abs(slope), relative_error=rel, ok=bool(rel <= DECAY_TOL),
                t_range=[float(t[keep][0]), float(t[keep][-1])])


# ------------------------------------------------------------------ connect

def connect(profile: StepProfile, itinerary=(), kind="heteroclinic", *, M: int | None = None,
            geometry: Geometry | None = None, window_length: float | None = None,
            max_points: int = 2 ** 16) -> RealizationResult:
    """Connection from (0, 0) to (1, 0) (heteroclinic) or back to (0, 0) (homoclinic)."""
    kind = ConnectionKind(kind)
    if isinstance(itinerary, Itinerary):
        itin = itinerary
    else:
        pairs = list(itinerary)
        if not pairs and M is None:
            M = 1
        itin = Itinerary.of(pairs, M)
    K = itin.K
    geom = geometry or analyze(profile.a_minus, profile.a_plus)
    e_star = _check_threshold(profile, itin.M, geom, "connection")
    rects = geom.rects
    for k in (-1, 6 * K + 1):
        profile.t(k)  # raises when the profile window is too short
    t_m1, t0, t6K, t6K1 = profile.t(-1), profile.t(0), profile.t(6 * K), profile.t(6 * K + 1)
    x1, x2 = geom.tails["x1"], geom.tails["x2"]

    # side A: unstable continuum of (0, 0) at t_-1 over [0, x1], pushed to t_0
    try:
        g_u = unstable_continuum(profile, t_m1, 0, window_length)
        g_s = stable_continuum(profile, t6K1, kind.terminal, window_length)
    except NagumoError as exc:
        raise ConnectionNotFound(f"continuum computation failed: {exc}") from exc
    side_a = CarriedCurve(g_u, tuple(profile_stages(profile, t_m1, t0)), _edge_eta(g_u, x1))
    (a_lo, a_hi), scan_a = _select(side_a, rects.R1, "minus", "unstable side")

    # nested selection through the K blocks
    log = []
    if K:
        sel = NestedSelection(side_a, (), rects, max_points=max_points, atol=TINY_ATOL)
        try:
            a_lo, a_hi = sel.select(itinerary_stages(profile, itin), a_lo, a_hi)
        except RealizationFailed as exc:
            raise ConnectionNotFound(f"block selection failed: {exc}") from exc
        finally:
            log = sel.log
    block_stages = [(s.a, s.duration) for s in itinerary_stages(profile, itin)]

    def f_a(sig):
        return side_a.graph.chain.carry(side_a.eta(sig), side_a.extra + tuple(block_stages), TINY_ATOL)

    # side B: stable continuum at t_6K+1 over [x2, 1] or [0, x1], pulled back to t_6K
    if kind is ConnectionKind.HETEROCLINIC:
        eta_b = _edge_eta(g_s, x2)
    else:
        # only the part of the continuum beyond its graph window carries a- energies of R1
        eta_b = _reach_eta(g_s, 1.0)
    side_b = CarriedCurve(g_s, tuple(profile_stages(profile, t6K1, t6K)), eta_b)
    (b_lo, b_hi), scan_b = _select(side_b, rects.R1, "plus", "stable side")

    path_a = _polyline(f_a, *_widen(a_lo, a_hi))
    path_b = _polyline(side_b, *_widen(b_lo, b_hi))
    hits = intersect_paths(path_a, path_b)
    if not hits.params:
        raise ConnectionNotFound("carried unstable and stable paths do not intersect at t_6K")
    s1, s2 = hits.params[0]
    i = min(int(np.searchsorted(path_a.s, s1, side="right")) - 1, len(path_a) - 2)
    j = min(int(np.searchsorted(path_b.s, s2, side="right")) - 1, len(path_b) - 2)
    ref = refine_crossing(f_a, side_b, (path_a.s[i], path_a.s[i + 1]), (path_b.s[j], path_b.s[j + 1]))
    if ref is None:
        raise ConnectionNotFound("intersection lost during refinement")
    sig_a, sig_b, p_meet = ref

    # rebuild both halves from their seeds and splice at t_6K
    eta_a = float(side_a.eta(sig_a))
    eta_b = float(side_b.eta(sig_b))
    loc_a = _half(profile, g_u, eta_a, t6K)
    loc_b = _half(profile, g_s, eta_b, t6K)
    glob_b = _mirror_traj(loc_b) if g_s.chain.mirrored else loc_b
    za, zb = loc_a(t6K), glob_b(t6K)
    splice_gap = float(np.hypot(*(za - zb)))
    segs = tuple(sorted(loc_a.segments + glob_b.segments, key=lambda s: s.t0))
    traj = Trajectory(segs, 1, {"splice_time": t6K, "splice_gap": splice_gap})

    cert = _connection_certificates(profile, kind, itin, traj, loc_a, loc_b, g_u, g_s, geom)
    achieved = _achieved(traj, profile, K) if K else []
    res = RealizationResult(PhasePoint.of(traj(t0)), t0, traj, itin, achieved,
                            _certificate(traj, profile, rects, K), (a_lo, a_hi), log)
    res.validation = cert
    res.extra = {
        "kind": kind.value,
        "eps_star_connection": e_star,
        "meeting_point": [float(p_meet[0]), float(p_meet[1])],
        "splice_time": t6K,
        "splice_gap": splice_gap,
        "seed_parameters": {"unstable_eta": eta_a, "stable_eta": eta_b},
        "seed_times": {"unstable": g_u.chain.seed_time, "stable": g_s.chain.seed_time},
        "selected_intervals": {"unstable": [a_lo, a_hi], "stable": [b_lo, b_hi]},
        "tail_windows": {"x1": x1, "x2": x2},
        "near_misses": len(hits.near_misses),
        "n_intersections": len(hits.params),
    }
    return res


def _connection_certificates(profile, kind, itin, traj, loc_a, loc_b, g_u, g_s, geom) -> dict:
    K = itin.K
    t_first, t_last = g_u.chain.seed_time, g_s.chain.seed_time
    t0, t6K = profile.t(0), profile.t(6 * K)
    t6K1 = profile.t(6 * K + 1)
    tail_end = t6K if kind is ConnectionKind.HETEROCLINIC else t6K1
    z_head = xprime_zeros(traj, t_first, t0)
    z_tail = xprime_zeros(traj, tail_end, t_last)
    out = {
        "head_zeros": len(z_head),
        "tail_zeros": len(z_tail),
        "tail_interval": [tail_end, t_last],
    }
    ok = not z_head and not z_tail
    if kind is ConnectionKind.HOMOCLINIC:
        mid = xprime_zeros(traj, t6K, t6K1)
        out["turn_zeros"] = len(mid)
        ok &= len(mid) == 1
    # containment, each half in its own frame so offsets near the saddles survive
    xa = loc_a.dense_samples(4)[1][:, 0]
    xb = loc_b.dense_samples(4)[1][:, 0]
    inside = bool(np.all((xa > 0.0) & (xa < 1.0)) and np.all((xb > 0.0) & (xb < 1.0)))
    out["containment"] = inside
    ok &= inside
    # equilibrium residuals at the window ends
    r_first = float(np.hypot(*loc_a(t_first)))
    r_last = float(np.hypot(*loc_b(t_last)))
    out["residuals"] = {"start": r_first, "end": r_last, "tol": RESIDUAL_TOL}
    ok &= r_first < RESIDUAL_TOL and r_last < RESIDUAL_TOL
    # decay on the constant pieces holding the seeds
    seg_a = min(loc_a.segments, key=lambda s: s.t0)
    seg_b = max(loc_b.segments, key=lambda s: s.t1)
    fit_a = _decay_fit(loc_a, seg_a, False, 0)
    fit_b = _decay_fit(loc_b, seg_b, g_s.chain.mirrored, kind.terminal)
    out["decay"] = {"start": fit_a, "end": fit_b}
    ok &= fit_a["ok"] and fit_b["ok"]
    drift = max(_energy_drift(loc_a), _energy_drift(loc_b))
    out["energy_drift"] = drift
    ok &= drift <= DRIFT_TOL
    blocks = []
    for j, (n_p, n_m) in enumerate(itin.blocks, 1):
        ent = {"j": j}
        for key, n, (k0, k1) in (("I_plus", n_p, (6 * j - 5, 6 * j - 4)), ("I_minus", n_m, (6 * j - 2, 6 * j - 1))):
            zs = xprime_zeros(traj, profile.t(k0), profile.t(k1))
            ent[key] = {"zeros": len(zs), "expected": 2 * n, "ok": len(zs) == 2 * n}
            ok &= len(zs) == 2 * n
        blocks.append(ent)
    out["blocks"] = blocks
    out["terminal_equilibrium"] = [float(kind.terminal), 0.0]
    out["passed"] = bool(ok)
    return out

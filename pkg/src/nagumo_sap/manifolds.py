"""Stable and unstable continua of the switched system, by eigendirection shooting.

A seed segment of length 1e-6 on the frozen eigendirection of a saddle is
placed far in the past (unstable) or future (stable) and carried to the
anchor time.  Seeds are parametrized by eta with offset 1e-6 * exp(-eta), so
eta -> infinity is the equilibrium itself.  The curve keeps its seed
parameters: later constructions move points of the continuum exactly by
re-integrating from the seed instead of interpolating the polyline.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import IntegrationError, LocalizationError, ValidationError
from .flow import profile_stages
from .paths import PhasePoint, PlanarPath, segment_intersection
from .phase_core import potential

SEED_OFFSET = 1e-6
LOCALIZATION_TOL = 1e-6


# ------------------------------------------------------------ graph windows

@dataclass(frozen=True)
class GraphWindows:
    a_minus_0: float
    a_plus_1: float


def _monotone_end(a: float) -> float:
    # smaller root of -3x^2 + 2(1+a)x - a, where the cubic stops increasing
    return (1.0 + a - math.sqrt(a * a - a + 1.0)) / 3.0


def graph_window(a_minus: float, a_plus: float) -> GraphWindows:
    """x-ranges [0, a-^0] and [a+^1, 1] on which the continua are graphs."""
    if not (0.0 < a_minus <= a_plus < 1.0):
        raise ValidationError("need 0 < a_minus <= a_plus < 1")
    return GraphWindows(_monotone_end(a_minus), 1.0 - _monotone_end(1.0 - a_plus))


def cubic_slope(a: float, x):
    """d/dx of x(1-x)(x-a)."""
    x = np.asarray(x, float)
    return -3.0 * x * x + 2.0 * (1.0 + a) * x - a


# ------------------------------------------------------------------ kinds

class ManifoldKind(str, enum.Enum):
    UNSTABLE_FROM_0 = "UnstableFrom0"
    UNSTABLE_FROM_1 = "UnstableFrom1"
    STABLE_TO_0 = "StableTo0"
    STABLE_TO_1 = "StableTo1"

    @property
    def equilibrium(self) -> int:
        return 0 if self.value.endswith("0") else 1

    @property
    def unstable(self) -> bool:
        return self.value.startswith("Unstable")

    @property
    def y_sign(self) -> int:
        """Sign of y on the graph window."""
        s = 1 if self.equilibrium == 0 else -1
        return s if self.unstable else -s

    @classmethod
    def of(cls, unstable: bool, which: int) -> "ManifoldKind":
        if which not in (0, 1):
            raise ValidationError("which must be 0 or 1")
        return {(True, 0): cls.UNSTABLE_FROM_0, (True, 1): cls.UNSTABLE_FROM_1,
                (False, 0): cls.STABLE_TO_0, (False, 1): cls.STABLE_TO_1}[(unstable, which)]


def saddle_exponent(a: float, which: int) -> float:
    return math.sqrt(a) if which == 0 else math.sqrt(1.0 - a)


def eigendirection(kind: ManifoldKind, a: float) -> np.ndarray:
    """Unit vector at the saddle pointing into the strip along the required branch."""
    lam = saddle_exponent(a, kind.equilibrium)
    inward = 1.0 if kind.equilibrium == 0 else -1.0
    slope = lam if kind.unstable else -lam
    v = np.array([inward, inward * slope])
    return v / np.hypot(*v)


# ------------------------------------------------------------ seed chains

@dataclass(frozen=True)
class SeedChain:
    """Seeds near a saddle at seed_time carried by frozen stages to anchor_time.

    Work happens in a local frame where the saddle sits at the origin: for
    the saddle at (1, 0) the reflection (x, y) -> (1 - x, -y), which maps the
    equation with weight a to the one with weight 1 - a.  Offsets far below
    1e-16 thus stay representable.
    """

    kind: ManifoldKind
    seed_a: float
    seed_time: float
    anchor_time: float
    stages: tuple  # (a, signed duration), original frame
    offset: float = SEED_OFFSET

    @property
    def mirrored(self) -> bool:
        return self.kind.equilibrium == 1

    @property
    def equilibrium_point(self) -> np.ndarray:
        return np.array([float(self.kind.equilibrium), 0.0])

    def _local_a(self, a: float) -> float:
        return 1.0 - a if self.mirrored else a

    def to_global(self, xy: np.ndarray) -> np.ndarray:
        if not self.mirrored:
            return xy
        return np.column_stack([1.0 - xy[:, 0], -xy[:, 1]])

    def seeds_local(self, eta) -> np.ndarray:
        eta = np.atleast_1d(np.asarray(eta, float))
        r = self.offset * np.exp(-eta)
        d = eigendirection(ManifoldKind.of(self.kind.unstable, 0), self._local_a(self.seed_a))
        return r[:, None] * d[None, :]

    def seeds(self, eta) -> np.ndarray:
        return self.to_global(self.seeds_local(eta))

    def carry_local(self, eta, extra: tuple = (), atol: float = 1e-15) -> np.ndarray:
        xy0 = self.seeds_local(eta)
        stages = tuple(self.stages) + tuple(extra)
        if not stages:
            return xy0
        a_seq = [self._local_a(a) for a, _ in stages]
        out, _, status = _kernels.batch_propagate(xy0, a_seq, [T for _, T in stages], atol=atol)
        if np.any(status != 0):
            raise IntegrationError("seed propagation failed")
        return out[:, -1, :]

    def carry(self, eta, extra: tuple = (), atol: float = 1e-15) -> np.ndarray:
        """Images at anchor_time (then through the extra stages) of the seeds."""
        return self.to_global(self.carry_local(eta, extra, atol))


def seed_chain(profile, t0: float, kind: ManifoldKind, window_length: float) -> SeedChain:
    if not window_length > 0.0:
        raise ValidationError("window_length must be positive")
    t_seed = t0 - window_length if kind.unstable else t0 + window_length
    stages = profile_stages(profile, t_seed, t0)
    if not stages:
        raise ValidationError("empty profile window")
    # weight active at the seed time: first piece of the chain
    a_seed = stages[0][0]
    return SeedChain(kind, a_seed, t_seed, t0, tuple(stages))


def default_window_length(a_minus: float, a_plus: float) -> float:
    return 20.0 / math.sqrt(min(a_minus, 1.0 - a_plus))


# ------------------------------------------------------------- manifolds

@dataclass(frozen=True)
class ManifoldGraph:
    kind: ManifoldKind
    anchor_time: float
    curve: PlanarPath  # from the equilibrium outwards, ends on the window edge
    graph_window: tuple
    window_length: float
    chain: SeedChain = field(repr=False)
    eta: np.ndarray = field(repr=False)  # seed parameter per vertex (inf at the equilibrium)
    localization_excess: float = 0.0

    def y_at(self, x):
        """Graph value by linear interpolation along the certified window."""
        xs, ys = self.curve.xy[:, 0], self.curve.xy[:, 1]
        if xs[-1] < xs[0]:
            xs, ys = xs[::-1], ys[::-1]
        return np.interp(x, xs, ys)

    def to_csv(self) -> str:
        lines = ["x,y"]
        lines += [f"{x:.17g},{y:.17g}" for x, y in self.curve.xy]
        return "\n".join(lines) + "\n"

    def describe(self) -> dict:
        return {
            "which": self.kind.value,
            "anchor_time": self.anchor_time,
            "graph_window": list(self.graph_window),
            "window_length": self.window_length,
            "seed_offset": self.chain.offset,
            "seed_a": self.chain.seed_a,
            "n_points": len(self.curve),
            "localization_excess": self.localization_excess,
        }


def _window_for(kind: ManifoldKind, a_minus: float, a_plus: float) -> tuple[float, float]:
    w = graph_window(a_minus, a_plus)
    return (0.0, w.a_minus_0) if kind.equilibrium == 0 else (w.a_plus_1, 1.0)


def _outward(kind: ManifoldKind, x):
    """Distance from the equilibrium measured into the strip."""
    return x if kind.equilibrium == 0 else 1.0 - x


def localization_residual(kind: ManifoldKind, a_minus: float, a_plus: float, xy: np.ndarray) -> np.ndarray:
    """Amount by which samples fall outside the band between the two frozen manifolds.

    Energies are taken relative to the saddle level of each frozen system;
    the continuum must sit where the two relative energies straddle zero.
    """
    i = float(kind.equilibrium)
    rel = []
    for a in (a_minus, a_plus):
        e = 0.5 * xy[:, 1] ** 2 + potential(a, xy[:, 0]) - potential(a, i)
        rel.append(e)
    lo = np.minimum(rel[0], rel[1])
    hi = np.maximum(rel[0], rel[1])
    return np.maximum(np.maximum(lo, 0.0), np.maximum(-hi, 0.0))


def _eta_span(chain: SeedChain, window_length: float, a_vals) -> float:
    lam = max(saddle_exponent(a, chain.kind.equilibrium) for a in a_vals)
    # past this the images sit within ~1e-12 of the equilibrium
    return lam * window_length + math.log(chain.offset / 1e-12)


def _trace(chain: SeedChain, edge: float, eta_max: float, h_max: float, n0: int = 801,
           max_points: int = 200_000):
    """Polyline of images from the equilibrium out to the window edge (outward distance `edge`)."""
    eta = np.linspace(0.0, eta_max, n0)
    img = chain.carry_local(eta)
    dist = img[:, 0]
    # walk from the equilibrium end until the image first leaves the window
    out_idx = None
    for i in range(n0 - 1, -1, -1):
        if dist[i] > edge:
            out_idx = i
            break
    if out_idx is None:
        raise LocalizationError("continuum never reaches the window edge; increase window_length")
    lo, hi = eta[out_idx], eta[out_idx + 1]  # image leaves at lo, inside at hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if chain.carry_local([mid])[0, 0] > edge:
            lo = mid
        else:
            hi = mid
    # eta where the curve meets the edge (to rounding); keep the inside endpoint
    e_edge = hi
    grid = np.concatenate([[e_edge], eta[out_idx + 1:]])
    pts = np.vstack([chain.carry_local([e_edge]), img[out_idx + 1:]])
    # refine until neighbouring vertices are at most h_max apart
    for _ in range(40):
        gaps = np.hypot(*np.diff(pts, axis=0).T)
        bad = np.nonzero(gaps > h_max)[0]
        if bad.size == 0:
            break
        if grid.size + bad.size > max_points:
            raise LocalizationError("curve refinement budget exhausted")
        new_eta = 0.5 * (grid[bad] + grid[bad + 1])
        new_pts = chain.carry_local(new_eta)
        grid = np.insert(grid, bad + 1, new_eta)
        pts = np.insert(pts, bad + 1, new_pts, axis=0)
    # reorder: equilibrium first; points stay in the local frame
    grid = np.concatenate([[np.inf], grid[::-1]])
    pts = np.vstack([np.zeros((1, 2)), pts[::-1]])
    return grid, pts


def _continuum(profile, t0: float, which: int, window_length: float | None, unstable: bool,
               h_max: float) -> ManifoldGraph:
    a_minus, a_plus = _bounds(profile)
    kind = ManifoldKind.of(unstable, which)
    if window_length is None:
        window_length = default_window_length(a_minus, a_plus)
    chain = seed_chain(profile, t0, kind, window_length)
    lo, hi = _window_for(kind, a_minus, a_plus)
    edge = hi if kind.equilibrium == 0 else 1.0 - lo
    eta_max = _eta_span(chain, window_length, (a_minus, a_plus))
    eta, local = _trace(chain, edge, eta_max, h_max)
    if np.any(np.diff(local[:, 0]) <= 0.0):
        raise LocalizationError("curve is not a graph over the window")
    pts = chain.to_global(local)
    sign_bad = kind.y_sign * pts[1:, 1] < -LOCALIZATION_TOL
    if np.any(sign_bad):
        raise LocalizationError("curve has the wrong sign of y on the graph window")
    excess = float(np.max(localization_residual(kind, a_minus, a_plus, pts)))
    if excess > LOCALIZATION_TOL:
        raise LocalizationError(f"curve leaves the band between the frozen manifolds by {excess:.3g}")
    s = np.linspace(0.0, 1.0, pts.shape[0])
    curve = PlanarPath(s, pts, {"kind": kind.value})
    return ManifoldGraph(kind, float(t0), curve, (lo, hi), float(window_length), chain, eta, excess)


def _bounds(profile) -> tuple[float, float]:
    if hasattr(profile, "a_minus"):
        return profile.a_minus, profile.a_plus
    return profile.a, profile.a


def unstable_continuum(profile, t0: float, which: int, window_length: float | None = None, *,
                       h_max: float = 1e-4) -> ManifoldGraph:
    """The set of states at t0 whose past converges to (which, 0), on its graph window."""
    return _continuum(profile, t0, which, window_length, True, h_max)


def stable_continuum(profile, t0: float, which: int, window_length: float | None = None, *,
                     h_max: float = 1e-4) -> ManifoldGraph:
    """The set of states at t0 whose future converges to (which, 0), on its graph window."""
    return _continuum(profile, t0, which, window_length, False, h_max)


def curve_distance(g1: ManifoldGraph, g2: ManifoldGraph) -> float:
    """Sup over the vertices of g1 of the graph difference |y1(x) - y2(x)|."""
    x = g1.curve.xy[:, 0]
    return float(np.max(np.abs(g1.curve.xy[:, 1] - g2.y_at(x))))


# ------------------------------------------------------------ intersection

@dataclass
class IntersectionResult:
    points: list  # PhasePoint per transversal crossing
    params: list  # (s1, s2) path parameters
    near_misses: list  # PhasePoint per tangential contact within tolerance

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)


def _seg_distance(p0, p1, q0, q1) -> tuple[float, np.ndarray]:
    """Minimal distance between two segments and the midpoint of the closest pair."""
    best = (math.inf, None)
    for a, b, c in ((p0, q0, q1), (p1, q0, q1), (q0, p0, p1), (q1, p0, p1)):
        d = c - b
        L2 = float(d @ d)
        t = 0.0 if L2 == 0.0 else min(max(float((a - b) @ d) / L2, 0.0), 1.0)
        proj = b + t * d
        dist = float(np.hypot(*(a - proj)))
        if dist < best[0]:
            best = (dist, 0.5 * (a + proj))
    return best


def intersect_paths(path1: PlanarPath, path2: PlanarPath, tol: float = 1e-9) -> IntersectionResult:
    """Transversal crossings of two polylines plus near-tangential contacts within tol."""
    P, Q = path1.xy, path2.xy
    if len(path1) < 2 or len(path2) < 2:
        return IntersectionResult([], [], [])
    p0, p1 = P[:-1], P[1:]
    q0, q1 = Q[:-1], Q[1:]
    pmin, pmax = np.minimum(p0, p1) - tol, np.maximum(p0, p1) + tol
    qmin, qmax = np.minimum(q0, q1), np.maximum(q0, q1)
    points, params, near = [], [], []
    seen = set()
    chunk = max(1, 2_000_000 // max(1, q0.shape[0]))
    for i0 in range(0, p0.shape[0], chunk):
        sl = slice(i0, i0 + chunk)
        hit = ((pmin[sl, None, 0] <= qmax[None, :, 0]) & (qmin[None, :, 0] <= pmax[sl, None, 0])
               & (pmin[sl, None, 1] <= qmax[None, :, 1]) & (qmin[None, :, 1] <= pmax[sl, None, 1]))
        for i, j in zip(*np.nonzero(hit)):
            i += i0
            uv = segment_intersection(p0[i], p1[i], q0[j], q1[j])
            if uv is not None:
                u, v = uv
                pt = p0[i] + u * (p1[i] - p0[i])
                q = tol if tol > 0.0 else 1e-15
                key = (round(pt[0] / q), round(pt[1] / q))
                if key in seen:
                    continue  # crossing through a shared vertex
                seen.add(key)
                s1 = path1.s[i] + u * (path1.s[i + 1] - path1.s[i])
                s2 = path2.s[j] + v * (path2.s[j + 1] - path2.s[j])
                points.append(PhasePoint.of(pt))
                params.append((float(s1), float(s2)))
                continue
            d, mid = _seg_distance(p0[i], p1[i], q0[j], q1[j])
            if d <= tol:
                near.append(PhasePoint.of(mid))
                # collinear overlaps: report the shared vertices too
                for v in (p0[i], p1[i]):
                    dv, _ = _seg_distance(v, v, q0[j], q1[j])
                    if dv <= tol:
                        near.append(PhasePoint.of(v))
    order = np.argsort([s for s, _ in params]) if params else []
    return IntersectionResult([points[k] for k in order], [params[k] for k in order], near)


def refine_crossing(f1, f2, s1: tuple[float, float], s2: tuple[float, float], tol: float = 1e-9,
                    n: int = 9, max_iter: int = 80):
    """Zoom in on a crossing of two parametrized curves f(sigma) -> xy (vectorized).

    s1, s2 bracket the crossing in each parameter.  Each pass resamples both
    brackets at n points and keeps the segment pair that crosses; it stops
    once both bracketing segments are shorter than tol.  Returns
    (sigma1, sigma2, point) or None when the crossing is lost.
    """
    a1, b1 = s1
    a2, b2 = s2
    for _ in range(max_iter):
        g1 = np.linspace(a1, b1, n)
        g2 = np.linspace(a2, b2, n)
        P = f1(g1)
        Q = f2(g2)
        r = intersect_paths(PlanarPath(g1, P), PlanarPath(g2, Q), tol=0.0)
        if not r.params:
            return None
        u, v = r.params[0]
        i = min(int(np.searchsorted(g1, u, side="right")) - 1, n - 2)
        j = min(int(np.searchsorted(g2, v, side="right")) - 1, n - 2)
        a1, b1 = g1[i], g1[i + 1]
        a2, b2 = g2[j], g2[j + 1]
        l1 = float(np.hypot(*(P[i + 1] - P[i])))
        l2 = float(np.hypot(*(Q[j + 1] - Q[j])))
        if (l1 <= tol and l2 <= tol) or (b1 - a1 <= 1e-15 * max(1.0, abs(a1))):
            return u, v, np.asarray(r.points[0].as_array())
    return u, v, np.asarray(r.points[0].as_array())

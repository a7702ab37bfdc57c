"""Piecewise-autonomous flow: step profiles, trajectories, Poincaré maps.

Two independent integrators live here on purpose.  ``integrate`` builds a
``Trajectory`` with scipy's DOP853 and dense output (one solve per constant-a
segment, stopping exactly at switch times); the compiled batch kernel in
``_kernels`` serves the bulk map evaluations.  Tests compare the two.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import _kernels
from .errors import AmbiguousTurnCount, AngleUndefined, IntegrationError, ValidationError
from .paths import PhasePoint
from .phase_core import SystemParams, cubic

RTOL = 1e-10
ATOL = 1e-12
MAX_STEP = 0.5


# ------------------------------------------------------------------ profiles

@dataclass(frozen=True)
class StepProfile:
    """Two-valued step weight a(s): a_minus on [s_2k, s_2k+1), a_plus otherwise.

    ``switch_times`` holds s_k for k = first_index, first_index + 1, ...
    """

    a_minus: float
    a_plus: float
    switch_times: np.ndarray
    delta: float
    epsilon: float
    first_index: int = 0

    def __post_init__(self):
        s = np.asarray(self.switch_times, dtype=float).ravel()
        object.__setattr__(self, "switch_times", s)
        if not (0.0 < self.a_minus < 0.5 < self.a_plus < 1.0):
            raise ValidationError("need 0 < a_minus < 1/2 < a_plus < 1")
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ValidationError("epsilon must be positive")
        if s.size < 2:
            raise ValidationError("need at least two switch times")
        gaps = np.diff(s)
        if np.any(gaps <= 0.0):
            raise ValidationError("switch times must increase strictly")
        if not (0.0 < self.delta <= gaps.min() * (1 + 1e-12)):
            raise ValidationError("delta must satisfy 0 < delta <= min gap")

    # construction helpers
    @classmethod
    def from_gaps(cls, a_minus, a_plus, gaps: Sequence[float], epsilon: float, *, first_index: int = 0,
                  s0: float = 0.0, delta: float | None = None) -> "StepProfile":
        s = s0 + np.concatenate([[0.0], np.cumsum(np.asarray(gaps, dtype=float))])
        d = float(np.min(gaps)) if delta is None else delta
        return cls(a_minus, a_plus, s, d, epsilon, first_index)

    @classmethod
    def uniform(cls, a_minus, a_plus, delta: float, epsilon: float, k_first: int, k_last: int) -> "StepProfile":
        ks = np.arange(k_first, k_last + 1)
        return cls(a_minus, a_plus, ks * float(delta), delta, epsilon, k_first)

    @classmethod
    def periodic(cls, a_minus, a_plus, gaps6: Sequence[float], epsilon: float, k_first: int, k_last: int,
                 delta: float | None = None) -> "StepProfile":
        g = np.asarray(gaps6, dtype=float)
        if g.shape != (6,):
            raise ValidationError("a periodic profile needs six gaps")
        ks = np.arange(k_first, k_last + 1)
        # s_k for k = 6m + r is m * sum(g) + sum(g[:r])
        period = g.sum()
        offs = np.concatenate([[0.0], np.cumsum(g)])
        s = np.array([(k // 6) * period + offs[k % 6] for k in ks])
        return cls(a_minus, a_plus, s, float(g.min()) if delta is None else delta, epsilon, k_first)

    @property
    def last_index(self) -> int:
        return self.first_index + self.switch_times.size - 1

    def s(self, k: int) -> float:
        i = k - self.first_index
        if not (0 <= i < self.switch_times.size):
            raise ValidationError(f"switch index {k} outside the profile window")
        return float(self.switch_times[i])

    def t(self, k: int) -> float:
        return self.s(k) / self.epsilon

    def a_of_index(self, k: int) -> float:
        """Weight active on [s_k, s_k+1)."""
        return self.a_minus if k % 2 == 0 else self.a_plus

    def rescaled(self) -> np.ndarray:
        return self.switch_times / self.epsilon

    def with_epsilon(self, epsilon: float) -> "StepProfile":
        return StepProfile(self.a_minus, self.a_plus, self.switch_times, self.delta, epsilon, self.first_index)

    def segments(self, t0: float, t1: float) -> list[tuple[float, float, float]]:
        """Constant-a pieces (a, start, end) covering [t0, t1] (t0 < t1)."""
        tk = self.rescaled()
        if t0 < tk[0] - 1e-9 * max(1.0, abs(tk[0])) or t1 > tk[-1] + 1e-9 * max(1.0, abs(tk[-1])):
            raise ValidationError("time interval leaves the profile window")
        out = []
        i = int(np.searchsorted(tk, t0, side="right")) - 1
        i = max(i, 0)
        cur = t0
        while cur < t1:
            end = min(t1, tk[i + 1]) if i + 1 < tk.size else t1
            if end > cur:
                out.append((self.a_of_index(self.first_index + i), cur, end))
            cur = end
            i += 1
        return out

    def describe(self) -> dict:
        return {
            "a_minus": self.a_minus,
            "a_plus": self.a_plus,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "first_index": self.first_index,
            "switch_times": [float(v) for v in self.switch_times],
        }


@dataclass(frozen=True)
class ConstantProfile:
    """a(t) = a for all t; lets the autonomous case share the profile interface."""

    a: float

    def __post_init__(self):
        if not (0.0 < self.a < 1.0):
            raise ValidationError("need 0 < a < 1")

    def segments(self, t0: float, t1: float) -> list[tuple[float, float, float]]:
        return [(self.a, t0, t1)] if t1 > t0 else []

    def describe(self) -> dict:
        return {"a": self.a, "constant": True}


def profile_stages(profile, t0: float, t1: float) -> list[tuple[float, float]]:
    """(a, signed duration) pieces carrying a state from t0 to t1 (either direction)."""
    lo, hi = min(t0, t1), max(t0, t1)
    pieces = profile.segments(lo, hi)
    if t1 >= t0:
        return [(a, e - s) for a, s, e in pieces]
    return [(a, s - e) for a, s, e in reversed(pieces)]


def rescale(profile: StepProfile) -> np.ndarray:
    return profile.rescaled()


# -------------------------------------------------------------- trajectories

def _rhs(a: float):
    def f(t, z):
        x = z[0]
        if 0.0 < x < 1.0:
            return [z[1], -x * (1.0 - x) * (x - a)]
        return [z[1], 0.0]
    return f


@dataclass(frozen=True)
class Segment:
    a: float
    t0: float
    t1: float
    sol: object  # OdeSolution on [min, max]
    ts: np.ndarray  # step points, increasing
    zs: np.ndarray  # states at step points

    def __call__(self, t):
        return self.sol(t)


@dataclass(frozen=True)
class Trajectory:
    segments: tuple
    direction: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def t_start(self) -> float:
        return self.segments[0].t0 if self.direction > 0 else self.segments[-1].t1

    @property
    def t_end(self) -> float:
        return self.segments[-1].t1 if self.direction > 0 else self.segments[0].t0

    @property
    def t_min(self) -> float:
        return min(s.t0 for s in self.segments)

    @property
    def t_max(self) -> float:
        return max(s.t1 for s in self.segments)

    @property
    def t(self) -> np.ndarray:
        return np.concatenate([s.ts if i == 0 else s.ts[1:] for i, s in enumerate(self.segments)])

    @property
    def states(self) -> np.ndarray:
        return np.concatenate([s.zs if i == 0 else s.zs[1:] for i, s in enumerate(self.segments)])

    def _segment_for(self, t: float) -> Segment:
        for seg in self.segments:
            if seg.t0 - 1e-12 <= t <= seg.t1 + 1e-12:
                return seg
        raise ValidationError(f"time {t} outside trajectory")

    def __call__(self, t) -> np.ndarray:
        """State(s) at time(s) t from dense output."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((ts.size, 2))
        for i, tt in enumerate(ts):
            out[i] = self._segment_for(tt)(tt)
        return out[0] if np.ndim(t) == 0 else out

    def point(self, t: float) -> PhasePoint:
        return PhasePoint.of(self(t))

    def end_point(self) -> PhasePoint:
        return self.point(self.t_end)

    def dense_samples(self, per_step: int = 8) -> tuple[np.ndarray, np.ndarray]:
        """Step points refined by per_step sub-samples, with states."""
        t_parts, z_parts = [], []
        for i, seg in enumerate(self.segments):
            ts = seg.ts
            if ts.size == 1:
                tt = ts
            else:
                frac = np.arange(per_step) / per_step
                tt = (ts[:-1, None] + np.diff(ts)[:, None] * frac[None, :]).ravel()
                tt = np.append(tt, ts[-1])
            zz = np.asarray(seg(tt)).T.reshape(-1, 2) if ts.size > 1 else seg.zs
            if i > 0:
                tt, zz = tt[1:], zz[1:]
            t_parts.append(tt)
            z_parts.append(zz)
        return np.concatenate(t_parts), np.concatenate(z_parts)

    def to_csv(self, stream=None, per_step: int = 1) -> str:
        buf = stream if stream is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y"])
        tt, zz = self.dense_samples(per_step) if per_step > 1 else (self.t, self.states)
        for t, (x, y) in zip(tt, zz):
            w.writerow([f"{t:.17g}", f"{x:.17g}", f"{y:.17g}"])
        return buf.getvalue() if stream is None else ""


def _solve_segment(a, z0, t0, t1, rtol, atol, max_step) -> Segment:
    if t1 == t0:
        sol = lambda t, z=np.array(z0, float): z.copy()
        return Segment(a, t0, t1, sol, np.array([t0]), np.array([z0], float))
    res = solve_ivp(_rhs(a), (t0, t1), np.asarray(z0, float), method="DOP853", dense_output=True,
                    rtol=rtol, atol=atol, max_step=max_step)
    if res.status < 0 or not np.all(np.isfinite(res.y)):
        raise IntegrationError(f"integration failed on [{t0}, {t1}]: {res.message}")
    ts, zs = res.t, res.y.T
    if t1 < t0:
        ts, zs = ts[::-1], zs[::-1]
    lo, hi = min(t0, t1), max(t0, t1)
    return Segment(a, lo, hi, res.sol, ts, zs)


def integrate(system, p0, t0: float, t1: float, *, rtol: float = RTOL, atol: float = ATOL,
              max_step: float = MAX_STEP) -> Trajectory:
    """Integrate from (t0, p0) to t1 under a constant weight or a StepProfile.

    Backward integration (t1 < t0) is allowed.  Switch times are hard
    boundaries: every solve covers one constant-a piece only.
    """
    z = np.asarray(p0.as_array() if isinstance(p0, PhasePoint) else p0, dtype=float)
    if not np.all(np.isfinite(z)):
        raise IntegrationError("non-finite initial state")
    forward = t1 >= t0
    lo, hi = (t0, t1) if forward else (t1, t0)
    if hasattr(system, "segments"):
        pieces = system.segments(lo, hi) if hi > lo else []
        if not pieces:
            pieces = [(getattr(system, "a", getattr(system, "a_minus", 0.5)), lo, hi)]
    else:
        a = system.a if isinstance(system, SystemParams) else float(system)
        pieces = [(a, lo, hi)]
    if not forward:
        pieces = pieces[::-1]
    segs = []
    for a, s0, s1 in pieces:
        ta, tb = (s0, s1) if forward else (s1, s0)
        seg = _solve_segment(a, z, ta, tb, rtol, atol, max_step)
        segs.append(seg)
        z = np.asarray(seg(tb), dtype=float)
    segs.sort(key=lambda s: s.t0)
    return Trajectory(tuple(segs), 1 if forward else -1)


# ------------------------------------------------------------- Poincaré maps

@dataclass(frozen=True)
class StageMap:
    """Time-T flow of the frozen system with weight a (T may be negative)."""

    a: float
    T: float
    label: str = ""

    def __call__(self, p) -> PhasePoint:
        out = self.batch(np.asarray(p.as_array() if isinstance(p, PhasePoint) else p, float)[None, :])
        return PhasePoint.of(out[0])

    def batch(self, xy: np.ndarray) -> np.ndarray:
        out, _, status = _kernels.batch_propagate(xy, [self.a], [self.T])
        if np.any(status != 0):
            raise IntegrationError("batch integration failed")
        return out[:, -1, :]

    def batch_with_angle(self, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        out, gains, status = _kernels.batch_propagate(xy, [self.a], [self.T])
        if np.any(status != 0):
            raise IntegrationError("batch integration failed")
        return out[:, -1, :], gains[:, -1]

    def inverse(self) -> "StageMap":
        return StageMap(self.a, -self.T, self.label + "^-1")


def poincare(system, T: float, p) -> PhasePoint:
    """Psi^T of the frozen system (pass a_minus for Psi_-, a_plus for Psi_+)."""
    if T < 0:
        raise ValidationError("T must be non-negative; use StageMap.inverse for backward maps")
    a = system.a if isinstance(system, SystemParams) else float(system)
    return StageMap(a, T)(p)


@dataclass(frozen=True)
class ComposedMap:
    """Composition of frozen flows, applied left to right."""

    stages: tuple  # of StageMap

    def __call__(self, p) -> PhasePoint:
        z = np.asarray(p.as_array() if isinstance(p, PhasePoint) else p, float)
        return PhasePoint.of(self.batch(z[None, :])[0])

    def batch(self, xy: np.ndarray) -> np.ndarray:
        return self.batch_all(xy)[:, -1, :]

    def batch_all(self, xy: np.ndarray) -> np.ndarray:
        a_seq = [s.a for s in self.stages]
        dt_seq = [s.T for s in self.stages]
        if not a_seq:
            return np.asarray(xy, float)[:, None, :]
        out, _, status = _kernels.batch_propagate(xy, a_seq, dt_seq)
        if np.any(status != 0):
            raise IntegrationError("batch integration failed")
        return out


def stage_maps(profile: StepProfile, k_from: int, k_to: int) -> tuple:
    return tuple(StageMap(profile.a_of_index(k), profile.t(k + 1) - profile.t(k), f"stage{k}")
                 for k in range(k_from, k_to))


def block_map(profile: StepProfile, k: int) -> ComposedMap:
    """phi_k over [t_6k, t_6k+6]."""
    if 6 * k < profile.first_index or 6 * k + 6 > profile.last_index:
        raise ValidationError(f"block {k} outside the profile window")
    return ComposedMap(stage_maps(profile, 6 * k, 6 * k + 6))


# ----------------------------------------------------------- angle & turns

@dataclass(frozen=True)
class AngleLift:
    center_x: float
    t: np.ndarray
    theta_samples: np.ndarray

    def theta(self, t):
        return np.interp(t, self.t, self.theta_samples)

    def winding(self, ta: float, tb: float) -> float:
        return float((self.theta(tb) - self.theta(ta)) / (2.0 * math.pi))


def angle_lift(center_a: float, traj: Trajectory, per_step: int = 16) -> AngleLift:
    """Continuous clockwise angle around (center_a, 0).

    theta(t0) is atan2(-y, x - c) taken in [-pi, pi) (the ray y = 0, x < c
    gets -pi), so starts in the upper half plane land in [-pi, 0].
    """
    tt, zz = traj.dense_samples(per_step)
    dx = zz[:, 0] - center_a
    r = np.hypot(dx, zz[:, 1])
    if np.any(r < 1e-12):
        raise AngleUndefined("trajectory passes through the center")
    raw = np.arctan2(-zz[:, 1], dx)
    if traj.direction < 0:
        raw, tt_ord = raw[::-1], tt[::-1]
    else:
        tt_ord = tt
    th = np.unwrap(raw)
    first = th[0]
    if first >= math.pi:
        shift = -2.0 * math.pi
    else:
        shift = 0.0
    th = th + shift
    if traj.direction < 0:
        th, tt_ord = th[::-1], tt_ord[::-1]
    return AngleLift(center_a, tt_ord, th)


@dataclass(frozen=True)
class TurnCount:
    turns: int
    zeros: tuple
    winding: float | None


def xprime_zeros(traj: Trajectory, ta: float, tb: float, per_step: int = 8) -> list[float]:
    """Zeros of y = x' on [ta, tb], refined to 1e-10 in t."""
    tt, zz = traj.dense_samples(per_step)
    mask = (tt > ta) & (tt < tb)
    tt = np.concatenate([[ta], tt[mask], [tb]])
    ys = np.concatenate([[traj(ta)[1]], zz[mask, 1], [traj(tb)[1]]])
    zeros: list[float] = []
    for i in range(tt.size - 1):
        y0, y1 = ys[i], ys[i + 1]
        if y0 == 0.0:
            if not zeros or abs(zeros[-1] - tt[i]) > 1e-12:
                zeros.append(float(tt[i]))
        elif y0 * y1 < 0.0:
            z = brentq(lambda t: traj(t)[1], tt[i], tt[i + 1], xtol=1e-12, rtol=1e-15)
            zeros.append(float(z))
    if ys[-1] == 0.0 and (not zeros or abs(zeros[-1] - tt[-1]) > 1e-12):
        zeros.append(float(tt[-1]))
    return zeros


def count_turns(traj: Trajectory, interval: tuple[float, float], center_a: float | None = None) -> TurnCount:
    ta, tb = interval
    zeros = xprime_zeros(traj, ta, tb)
    for z0, z1 in zip(zeros[:-1], zeros[1:]):
        if z1 - z0 < 1e-8:
            raise AmbiguousTurnCount("zeros of x' closer than 1e-8", {"zeros": zeros})
    for z in zeros:
        x = traj(z)[0]
        seg = traj._segment_for(z)
        acc = abs(cubic(seg.a, x))
        if acc < 1e-12:
            raise AmbiguousTurnCount("non-simple zero of x'", {"zeros": zeros, "at": z})
    if len(zeros) % 2:
        raise AmbiguousTurnCount(f"odd number of zeros ({len(zeros)})", {"zeros": zeros})
    wind = None
    if center_a is not None:
        try:
            lift = angle_lift(center_a, traj)
            wind = lift.winding(ta, tb)
        except AngleUndefined:
            wind = None
    return TurnCount(len(zeros) // 2, tuple(zeros), wind)

"""Closed orbits just inside a homoclinic loop, handled in level/phase form.

An orbit is named by its energy gap s = E_hom - E > 0.  For s far below the
resolution of x near the saddle (1 - x ~ sqrt(s)), motion along the orbit is
still exact here: times are quadratures of 1/sqrt(G(u) - s) in the distance
u to the saddle, positions follow by inverting those times, and the energy
is carried as the pair (level, s) instead of being recomputed from (x, y).

Phase tau runs from 0 at the turning point next to the saddle, in the
clockwise (forward-time) direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .errors import DomainError, NumericalFailure
from .phase_core import homoclinic_level, homoclinic_saddle, saddle_gap_coeffs
from .quadrature import NEGATIVE, OK, integral

SQRT2 = math.sqrt(2.0)
TWO_PI = 2.0 * math.pi
_TOL = 1e-13


@nb.njit(cache=True)
def _p(c, u):
    return c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * c[4])))


@nb.njit(cache=True)
def _dp(c, u):
    return c[1] + u * (2.0 * c[2] + u * (3.0 * c[3] + u * 4.0 * c[4]))


@nb.njit(cache=True)
def _safe_root(c, lo, hi, x0, increasing):
    """Root of the polynomial c on [lo, hi] by Newton with bisection fallback."""
    x = min(max(x0, lo), hi)
    for _ in range(400):
        f = _p(c, x)
        if f == 0.0:
            return x
        if (f < 0.0) == increasing:
            lo = x
        else:
            hi = x
        d = _dp(c, x)
        xn = x - f / d if d != 0.0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 4e-16 * abs(xn) or hi - lo <= 4e-16 * abs(hi):
            return xn
        x = xn
    return x


@nb.njit(cache=True)
def setup(g, s, u_center, u_apex):
    """Turning points and half period of the orbit with gap s (status last)."""
    rad = np.array([-s, 0.0, g[2], g[3], g[4]])
    guess = math.sqrt(s / g[2])
    u_t = _safe_root(rad, 0.0, u_center, guess, True)
    u_far = _safe_root(rad, u_center, u_apex, 0.5 * (u_center + u_apex), False)
    half, st = integral(rad, u_t, u_far, 1, 1, _TOL)
    return u_t, u_far, half / SQRT2, st


@nb.njit(cache=True)
def _tof(rad, u_t, u, u_far):
    """Time from the near turning point to distance u (upper end regular unless u = u_far)."""
    if u <= u_t:
        return 0.0, OK
    du = u - u_t
    if du <= 1e-8 * u_t:
        # square-root law next to a simple turning point
        return SQRT2 * math.sqrt(du / _dp(rad, u_t)), OK
    v, st = integral(rad, u_t, u, 1, 1 if u >= u_far else 0, _TOL)
    if st == NEGATIVE:
        v, st = integral(rad, u_t, u, 1, 1, _TOL)
    return v / SQRT2, st


@nb.njit(cache=True)
def u_at(rad, u_t, u_far, half, t):
    """Distance reached after time t in [0, half] from the near turning point.

    Solved in w with u = u_t cosh(w): the time is nearly linear in w while the
    orbit is close to the saddle.
    """
    if t <= 0.0:
        return u_t, OK
    if t >= half:
        return u_far, OK
    q3 = rad[4]
    q2 = rad[3] + u_t * q3
    q1 = rad[2] + u_t * q2
    q0 = u_t * q1
    w_far = math.acosh(u_far / u_t)
    lam = math.sqrt(2.0 * rad[2])
    lo, hi = 0.0, w_far
    w = min(lam * t, 0.5 * w_far)
    for _ in range(200):
        u = u_t * math.cosh(w)
        f, st = _tof(rad, u_t, min(u, u_far), u_far)
        if st != OK:
            return math.nan, st
        f -= t
        if abs(f) <= 1e-12 * max(1.0, t):
            return min(u, u_far), OK
        if f < 0.0:
            lo = w
        else:
            hi = w
        sh = math.sinh(0.5 * w)
        gap = 2.0 * u_t * sh * sh * (q0 + u * (q1 + u * (q2 + u * q3)))
        if gap > 0.0:
            deriv = u_t * math.sinh(w) / (SQRT2 * math.sqrt(gap))
            wn = w - f / deriv
        else:
            wn = 0.5 * (lo + hi)
        if not (lo < wn < hi):
            wn = 0.5 * (lo + hi)
        if abs(wn - w) <= 1e-12 * max(1.0, abs(wn)):
            return min(u_t * math.cosh(wn), u_far), OK
        w = wn
    return min(u_t * math.cosh(w), u_far), OK


@nb.njit(cache=True)
def twist_batch(g, s_arr, u0_arr, side0_arr, T, h1, u_center, u_apex):
    """Advance points (gap s, distance u0 on half plane side0) by time T.

    Returns u1, side1, tau0, tau1, full turns, period, status per point.
    """
    n = s_arr.shape[0]
    u1 = np.empty(n)
    side1 = np.empty(n, dtype=np.int64)
    tau0 = np.empty(n)
    tau1 = np.empty(n)
    turns = np.empty(n, dtype=np.int64)
    per = np.empty(n)
    status = np.zeros(n, dtype=np.int64)
    for i in range(n):
        s = s_arr[i]
        u_t, u_far, half, st = setup(g, s, u_center, u_apex)
        if st != OK:
            status[i] = st
            continue
        P = 2.0 * half
        rad = np.array([-s, 0.0, g[2], g[3], g[4]])
        u0 = min(max(u0_arr[i], u_t), u_far)
        t0, st = _tof(rad, u_t, u0, u_far)
        if st != OK:
            status[i] = st
            continue
        ph0 = t0 if side0_arr[i] == h1 else P - t0
        total = ph0 + T
        k = math.floor(total / P)
        ph1 = total - k * P
        if ph1 <= half:
            u, st = u_at(rad, u_t, u_far, half, ph1)
            sd = h1
        else:
            u, st = u_at(rad, u_t, u_far, half, P - ph1)
            sd = -h1
        u1[i] = u
        side1[i] = sd
        tau0[i] = ph0
        tau1[i] = ph1
        turns[i] = k
        per[i] = P
        status[i] = st
    return u1, side1, tau0, tau1, turns, per, status


def _apex_u(g, u_center) -> float:
    # G(u)/u^2 = g2 + g3 u + g4 u^2; its first root past the center is the loop apex
    roots = np.roots([g[4], g[3], g[2]])
    pos = sorted(r.real for r in roots if abs(r.imag) < 1e-14 and r.real > u_center)
    return pos[0] if pos else 1.0


@dataclass(frozen=True)
class LoopFamily:
    """The closed orbits inside the homoclinic loop of S(a)."""

    a: float
    saddle: int = field(init=False)
    g: np.ndarray = field(init=False, repr=False)
    u_center: float = field(init=False)
    u_apex: float = field(init=False)
    h1: int = field(init=False)
    angle0: float = field(init=False)

    def __post_init__(self):
        saddle = homoclinic_saddle(self.a)
        g = saddle_gap_coeffs(self.a, saddle)
        uc = abs(self.a - saddle)
        object.__setattr__(self, "saddle", saddle)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "u_center", uc)
        object.__setattr__(self, "u_apex", _apex_u(g, uc))
        # from the near turning point the motion enters the lower half plane
        # when the saddle is at 1 and the upper one when it is at 0
        object.__setattr__(self, "h1", -1 if saddle == 1 else 1)
        object.__setattr__(self, "angle0", 0.0 if saddle == 1 else math.pi)

    @property
    def level(self) -> float:
        return homoclinic_level(self.a)

    @property
    def lam(self) -> float:
        return math.sqrt(2.0 * self.g[2])

    def gap_of(self, u, y):
        """Energy gap s of the point at distance u from the saddle with velocity y."""
        return _p_np(self.g, u) - 0.5 * np.asarray(y) ** 2

    def x_of_u(self, u):
        return 1.0 - u if self.saddle == 1 else u

    def u_of_x(self, x):
        return 1.0 - x if self.saddle == 1 else x

    def y_of(self, s, u, side):
        rad = _p_np(self.g, u) - s
        return side * np.sqrt(2.0 * np.maximum(rad, 0.0))

    def orbit(self, s: float) -> "ClosedOrbit":
        return ClosedOrbit(self, s)

    def lifted_angle(self, x, y, tau, period):
        """Angle around (a, 0) continuous along one period starting at the near turning point."""
        raw = np.arctan2(-np.asarray(y, float), np.asarray(x, float) - self.a)
        val = self.angle0 + np.mod(raw - self.angle0, TWO_PI)
        late = (np.asarray(tau) > 0.5 * np.asarray(period)) & (val < self.angle0 + 0.5 * math.pi)
        return np.where(late, val + TWO_PI, val)

    def advance(self, s, u0, side0, T: float):
        """Move points of the family by time T.

        Returns (x1, y1, gain) where gain is the angle swept around (a, 0).
        """
        s = np.ascontiguousarray(np.atleast_1d(np.asarray(s, float)))
        u0 = np.ascontiguousarray(np.broadcast_to(np.asarray(u0, float), s.shape)).copy()
        sd0 = np.ascontiguousarray(np.broadcast_to(np.asarray(side0, np.int64), s.shape)).copy()
        if np.any(s <= 0.0):
            raise DomainError("gap to the homoclinic level must be positive")
        u1, sd1, tau0, tau1, turns, per, status = twist_batch(
            self.g, s, u0, sd0, float(T), self.h1, self.u_center, self.u_apex)
        if np.any(status != 0):
            raise NumericalFailure("quadrature failed along a closed orbit")
        x0 = self.x_of_u(u0)
        y0 = self.y_of(s, u0, sd0)
        x1 = self.x_of_u(u1)
        y1 = self.y_of(s, u1, sd1)
        a0 = self.lifted_angle(x0, y0, tau0, per)
        a1 = self.lifted_angle(x1, y1, tau1, per)
        gain = TWO_PI * turns + a1 - a0
        return x1, y1, gain


def _p_np(c, u):
    u = np.asarray(u, float)
    return c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * c[4])))


@dataclass(frozen=True)
class ClosedOrbit:
    family: LoopFamily
    s: float

    def __post_init__(self):
        if not (self.s > 0.0):
            raise DomainError("gap to the homoclinic level must be positive")
        if self.s >= _p_np(self.family.g, self.family.u_center):
            raise DomainError("gap exceeds the depth of the potential well")
        f = self.family
        u_t, u_far, half, st = setup(f.g, float(self.s), f.u_center, f.u_apex)
        if st != OK:
            raise NumericalFailure("quadrature failed for the half period")
        object.__setattr__(self, "u_t", u_t)
        object.__setattr__(self, "u_far", u_far)
        object.__setattr__(self, "half", half)

    @property
    def period(self) -> float:
        return 2.0 * self.half

    @property
    def level(self) -> float:
        return self.family.level - self.s

    def _rad(self):
        g = self.family.g
        return np.array([-self.s, 0.0, g[2], g[3], g[4]])

    def position(self, tau: float):
        """(x, y) at phase tau (mod the period)."""
        f = self.family
        tau = tau % self.period
        if tau <= self.half:
            u, st = u_at(self._rad(), self.u_t, self.u_far, self.half, tau)
            side = f.h1
        else:
            u, st = u_at(self._rad(), self.u_t, self.u_far, self.half, self.period - tau)
            side = -f.h1
        if st != OK:
            raise NumericalFailure("time inversion failed")
        return float(f.x_of_u(u)), float(f.y_of(self.s, u, side))

"""The frozen (autonomous) system x' = y, y' = -f_a(x).

f_a(x) = x(1-x)(x-a) on [0, 1] and zero outside.  Everything here is a
closed-form or quadrature fact about a single value of a.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoHomoclinic
from .paths import PhasePoint, PlanarPath
from .quadrature import inv_sqrt_integral

SQRT2 = math.sqrt(2.0)
EnergyLevel = float


@dataclass(frozen=True)
class SystemParams:
    a: float

    def __post_init__(self):
        a = float(self.a)
        if not (0.0 < a < 1.0):
            raise DomainError(f"a must lie in (0, 1), got {self.a!r}")
        object.__setattr__(self, "a", a)

    def mirror(self) -> "SystemParams":
        """Parameters of the system conjugate under x -> 1 - x."""
        return SystemParams(1.0 - self.a)


def _a(params) -> float:
    return params.a if isinstance(params, SystemParams) else SystemParams(params).a


class Tag(str, enum.Enum):
    CenterPoint = "CenterPoint"
    ClosedCycle = "ClosedCycle"
    HomoclinicUnion = "HomoclinicUnion"
    HeteroclinicUnion = "HeteroclinicUnion"
    InnerArc = "InnerArc"
    SaddleManifoldUnion = "SaddleManifoldUnion"
    TwoOuterCurves = "TwoOuterCurves"
    Empty = "Empty"


class Case(str, enum.Enum):
    aBelowHalf = "aBelowHalf"
    aEqualHalf = "aEqualHalf"
    aAboveHalf = "aAboveHalf"


@dataclass(frozen=True)
class LevelClass:
    tag: Tag
    case: Case


# ---------------------------------------------------------------- polynomials

def potential_coeffs(a: float) -> np.ndarray:
    """Ascending coefficients of F_a on [0, 1]."""
    return np.array([0.0, 0.0, -a / 2.0, (1.0 + a) / 3.0, -0.25])


def radicand_coeffs(a: float, c: float) -> np.ndarray:
    """Ascending coefficients of c - F_a(x)."""
    return np.array([c, 0.0, a / 2.0, -(1.0 + a) / 3.0, 0.25])


def saddle_gap_coeffs(a: float, saddle: int) -> np.ndarray:
    """G(u) = F_a(saddle) - F_a(x) written in the distance u = |x - saddle|.

    G has a double zero at u = 0, so energy offsets near a saddle can be
    formed without cancellation.
    """
    if saddle == 0:
        return np.array([0.0, 0.0, a / 2.0, -(1.0 + a) / 3.0, 0.25])
    if saddle == 1:
        return np.array([0.0, 0.0, (1.0 - a) / 2.0, (a - 2.0) / 3.0, 0.25])
    raise ValueError("saddle must be 0 or 1")


# ------------------------------------------------------------------ the field

def cubic(params, x):
    """Clamped nonlinearity: x(1-x)(x-a) on [0,1], zero elsewhere."""
    a = _a(params)
    x_arr = np.asarray(x, dtype=float)
    inside = (x_arr >= 0.0) & (x_arr <= 1.0)
    val = np.where(inside, x_arr * (1.0 - x_arr) * (x_arr - a), 0.0)
    return float(val) if np.ndim(val) == 0 else val


def potential(params, x):
    """F_a with F_a' = cubic, continued as a constant outside [0, 1]."""
    a = _a(params)
    xc = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    val = xc * xc * (-a / 2.0 + xc * ((1.0 + a) / 3.0 - 0.25 * xc))
    return float(val) if np.ndim(val) == 0 else val


def energy(params, p) -> EnergyLevel:
    if isinstance(p, PhasePoint):
        x, y = p.x, p.y
    else:
        x, y = p
    return 0.5 * y * y + potential(params, x)


def energy_array(a: float, xy: np.ndarray) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    return 0.5 * xy[..., 1] ** 2 + potential(a, xy[..., 0])


@dataclass(frozen=True)
class CriticalLevels:
    center: float
    saddle0: float
    saddle1: float


def critical_levels(params) -> CriticalLevels:
    a = _a(params)
    return CriticalLevels(center=potential(a, a), saddle0=0.0, saddle1=(1.0 - 2.0 * a) / 12.0)


def _case(a: float) -> Case:
    if a == 0.5:
        return Case.aEqualHalf
    return Case.aBelowHalf if a < 0.5 else Case.aAboveHalf


def classify_level(params, c: float) -> LevelClass:
    a = _a(params)
    lv = critical_levels(a)
    case = _case(a)
    if c < lv.center:
        tag = Tag.Empty
    elif c == lv.center:
        tag = Tag.CenterPoint
    elif case is Case.aEqualHalf:
        tag = Tag.ClosedCycle if c < 0.0 else (Tag.HeteroclinicUnion if c == 0.0 else Tag.TwoOuterCurves)
    else:
        lo, hi = sorted((lv.saddle0, lv.saddle1))
        if c < lo:
            tag = Tag.ClosedCycle
        elif c == lo:
            tag = Tag.HomoclinicUnion
        elif c < hi:
            tag = Tag.InnerArc
        elif c == hi:
            tag = Tag.SaddleManifoldUnion
        else:
            tag = Tag.TwoOuterCurves
    return LevelClass(tag, case)


def homoclinic_level(params) -> float:
    """Energy of the homoclinic loop H(a)."""
    a = _a(params)
    if a == 0.5:
        raise NoHomoclinic("a = 1/2 has heteroclinic, not homoclinic, orbits")
    return 0.0 if a < 0.5 else (1.0 - 2.0 * a) / 12.0


def homoclinic_saddle(params) -> int:
    a = _a(params)
    if a == 0.5:
        raise NoHomoclinic("a = 1/2 has heteroclinic, not homoclinic, orbits")
    return 0 if a < 0.5 else 1


def manifold_level(params) -> float:
    """Energy of the stable/unstable manifolds H±(a) of the other saddle."""
    a = _a(params)
    return (1.0 - 2.0 * a) / 12.0 if a < 0.5 else 0.0


def _apex_below_half(a: float) -> float:
    disc = 4.0 * (1.0 + a) ** 2 - 18.0 * a
    big = (2.0 * (1.0 + a) + math.sqrt(disc)) / 3.0
    return 2.0 * a / big  # product of the roots is 2a


def homoclinic_apex(params) -> float:
    """Abscissa z_a where H(a) meets the positive x semi-axis."""
    a = _a(params)
    if a == 0.5:
        raise NoHomoclinic("a = 1/2 has heteroclinic, not homoclinic, orbits")
    if a < 0.5:
        return _apex_below_half(a)
    return 1.0 - _apex_below_half(1.0 - a)


def linked(a_minus, a_plus) -> bool:
    am, ap = _a(a_minus), _a(a_plus)
    if not (am < 0.5 < ap):
        raise DomainError("linkage needs a_minus < 1/2 < a_plus")
    return homoclinic_apex(ap) < homoclinic_apex(am)


# ------------------------------------------------------------- level curves

def orbit_graph(params, c: float, x_lo: float, x_hi: float, branch: int = 1, n: int = 401) -> PlanarPath:
    """Sample y = branch*sqrt(2(c - F_a(x))) on [x_lo, x_hi]."""
    a = _a(params)
    if x_hi < x_lo:
        raise DomainError("x_lo must not exceed x_hi")
    if x_lo == x_hi:
        gap = c - potential(a, x_lo)
        if gap < -1e-13:
            raise DomainError("level below the potential")
        return PlanarPath(np.zeros(1), np.array([[x_lo, branch * math.sqrt(2 * max(gap, 0.0))]]))
    theta = np.linspace(0.0, math.pi, n)
    xs = x_lo + (x_hi - x_lo) * 0.5 * (1.0 - np.cos(theta))
    xs[0], xs[-1] = x_lo, x_hi
    gap = c - potential(a, xs)
    tol = 1e-13 * max(1.0, abs(c))
    if np.any(gap < -tol):
        raise DomainError("level lies below the potential on the requested interval")
    ys = branch * np.sqrt(2.0 * np.maximum(gap, 0.0))
    return PlanarPath(np.linspace(0.0, 1.0, n), np.column_stack([xs, ys]), {"a": a, "c": c})


def time_of_flight(params, c: float, x_lo: float, x_hi: float) -> float:
    """(1/sqrt2) ∫ dx / sqrt(c - F_a(x)) over [x_lo, x_hi].

    Endpoints may be simple turning points; an interior or double zero of
    the radicand (a saddle level) raises DomainError.
    """
    a = _a(params)
    if x_hi == x_lo:
        return 0.0
    if x_hi < x_lo:
        raise DomainError("x_lo must not exceed x_hi")
    total = 0.0
    # pieces outside [0, 1] have constant potential
    for bound, lo, hi in ((0.0, x_lo, min(x_hi, 0.0)), (1.0, max(x_lo, 1.0), x_hi)):
        if hi > lo:
            gap = c - potential(a, bound)
            if gap <= 0.0:
                raise DomainError("no motion outside the strip at this level")
            total += (hi - lo) / math.sqrt(gap)
    lo, hi = max(x_lo, 0.0), min(x_hi, 1.0)
    if hi > lo:
        for xc in (0.0, a, 1.0):
            if lo < xc < hi and abs(c - potential(a, xc)) <= 1e-15:
                raise DomainError("interior critical point on the level: infinite time")
        total += inv_sqrt_integral(radicand_coeffs(a, c), lo, hi)
    return total / SQRT2


def closed_band(params) -> tuple[float, float]:
    """x-range covered by the closed orbits around (a, 0)."""
    a = _a(params)
    if a < 0.5:
        return 0.0, homoclinic_apex(a)
    if a > 0.5:
        return homoclinic_apex(a), 1.0
    return 0.0, 1.0


def turning_point(params, q: float) -> float:
    """Opposite turning point eta of the closed orbit through (q, 0)."""
    a = _a(params)
    lo, hi = closed_band(a)
    if not (lo < q < hi):
        raise DomainError(f"q = {q} outside the closed-orbit band ({lo}, {hi})")
    if q == a:
        return a
    target = potential(a, q)
    g = lambda x: potential(a, x) - target
    if q > a:
        return brentq(g, lo, a, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return brentq(g, a, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def period(params, q: float) -> float:
    """Period of the closed orbit through (q, 0)."""
    a = _a(params)
    eta = turning_point(a, q)
    lo, hi = min(q, eta), max(q, eta)
    if hi - lo < 1e-7:
        return 2.0 * math.pi / math.sqrt(a * (1.0 - a))
    return 2.0 * time_of_flight(a, potential(a, q), lo, hi)


# -------------------------------------------------------------- equilibria

@dataclass(frozen=True)
class Equilibrium:
    x: float
    kind: str
    eigenvalues: tuple
    unstable: tuple | None
    stable: tuple | None


def equilibrium_data(params) -> tuple[Equilibrium, Equilibrium, Equilibrium]:
    a = _a(params)
    l0 = math.sqrt(a)
    l1 = math.sqrt(1.0 - a)
    w = math.sqrt(a * (1.0 - a))
    return (
        Equilibrium(0.0, "saddle", (l0, -l0), (1.0, l0), (1.0, -l0)),
        Equilibrium(a, "center", (complex(0, w), complex(0, -w)), None, None),
        Equilibrium(1.0, "saddle", (l1, -l1), (1.0, l1), (1.0, -l1)),
    )

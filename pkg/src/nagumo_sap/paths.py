"""Planar polylines with parameter values, plus segment geometry helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PathError


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError(f"non-finite phase point ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @classmethod
    def of(cls, v) -> "PhasePoint":
        return cls(float(v[0]), float(v[1]))


@dataclass(frozen=True)
class PlanarPath:
    """Polyline gamma(s), s in [0, 1], stored as parameter/point arrays."""

    s: np.ndarray
    xy: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        if s.ndim != 1 or s.size != xy.shape[0] or s.size == 0:
            raise PathError("parameter and point arrays disagree")
        if s.size > 1 and np.any(np.diff(s) <= 0.0):
            raise PathError("path parameters must be strictly increasing")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "xy", xy)

    @classmethod
    def from_points(cls, xy, meta: dict | None = None) -> "PlanarPath":
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        n = xy.shape[0]
        s = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
        return cls(s, xy, meta or {})

    def __len__(self) -> int:
        return self.s.size

    @property
    def start(self) -> PhasePoint:
        return PhasePoint.of(self.xy[0])

    @property
    def end(self) -> PhasePoint:
        return PhasePoint.of(self.xy[-1])

    def at(self, s: float) -> np.ndarray:
        """Linear interpolation on the polyline."""
        return np.array([np.interp(s, self.s, self.xy[:, 0]), np.interp(s, self.s, self.xy[:, 1])])

    def max_gap(self) -> float:
        if len(self) < 2:
            return 0.0
        return float(np.max(np.hypot(*np.diff(self.xy, axis=0).T)))


def segment_intersection(p0, p1, q0, q1):
    """Intersection parameters (u, v) of segments p0p1 and q0q1, or None.

    Parallel or collinear pairs return None; callers handle tangencies.
    """
    p0 = np.asarray(p0, float)
    r = np.asarray(p1, float) - p0
    q0 = np.asarray(q0, float)
    s = np.asarray(q1, float) - q0
    denom = r[0] * s[1] - r[1] * s[0]
    scale = np.hypot(*r) * np.hypot(*s)
    if scale == 0.0 or abs(denom) <= 1e-14 * scale:
        return None
    d = q0 - p0
    u = (d[0] * s[1] - d[1] * s[0]) / denom
    v = (d[0] * r[1] - d[1] * r[0]) / denom
    if -1e-12 <= u <= 1 + 1e-12 and -1e-12 <= v <= 1 + 1e-12:
        return min(max(u, 0.0), 1.0), min(max(v, 0.0), 1.0)
    return None

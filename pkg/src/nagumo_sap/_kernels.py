"""Compiled batch integrator: Dormand-Prince 8(5,3) with step-size control.

Used for bulk Poincaré-map evaluation along paths.  Each point is advanced
independently through a sequence of constant-a stages; stage boundaries are
hard stops.  Alongside the state the kernel accumulates the continuous
angle swept around (a_stage, 0) in the clockwise-positive convention
theta = atan2(-y, x - a).
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

# the bundled TBB is too old for numba; OpenMP is always present
nb.config.THREADING_LAYER = "omp"

_NS = _dop.N_STAGES
A = np.ascontiguousarray(_dop.A[:_NS, :_NS])
B = np.ascontiguousarray(_dop.B)
C = np.ascontiguousarray(_dop.C[:_NS])
E3 = np.ascontiguousarray(_dop.E3)
E5 = np.ascontiguousarray(_dop.E5)


@nb.njit(cache=True, inline="always")
def _force(a, x):
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * (1.0 - x) * (x - a)


@nb.njit(cache=True)
def _advance(a, x, y, T, rtol, atol, hmax, A, B, C, E3, E5):
    """Returns (x, y, angle_gain, status); status 0 ok, 1 nonfinite, 2 too many steps."""
    if T == 0.0:
        return x, y, 0.0, 0
    direction = 1.0 if T > 0.0 else -1.0
    remaining = abs(T)
    h = min(hmax, 0.05, remaining)
    K = np.empty((13, 2))
    th = math.atan2(-y, x - a)
    gain = 0.0
    nsteps = 0
    while remaining > 0.0:
        # free flight outside the strip, moving away from it
        if (x <= 0.0 and y * direction <= 0.0) or (x >= 1.0 and y * direction >= 0.0):
            x = x + direction * remaining * y
            new_th = math.atan2(-y, x - a)
            d = new_th - th
            if d > math.pi:
                d -= 2.0 * math.pi
            elif d < -math.pi:
                d += 2.0 * math.pi
            gain += d
            return x, y, gain, 0
        if h > remaining:
            h = remaining
        hs = direction * h
        K[0, 0] = y
        K[0, 1] = _force(a, x)
        for s in range(1, 12):
            xs = x
            ys = y
            for j in range(s):
                xs += hs * A[s, j] * K[j, 0]
                ys += hs * A[s, j] * K[j, 1]
            K[s, 0] = ys
            K[s, 1] = _force(a, xs)
        xn = x
        yn = y
        for j in range(12):
            xn += hs * B[j] * K[j, 0]
            yn += hs * B[j] * K[j, 1]
        K[12, 0] = yn
        K[12, 1] = _force(a, xn)
        e5x = 0.0
        e5y = 0.0
        e3x = 0.0
        e3y = 0.0
        for j in range(13):
            e5x += K[j, 0] * E5[j]
            e5y += K[j, 1] * E5[j]
            e3x += K[j, 0] * E3[j]
            e3y += K[j, 1] * E3[j]
        sx = atol + rtol * max(abs(x), abs(xn))
        sy = atol + rtol * max(abs(y), abs(yn))
        e5x /= sx
        e5y /= sy
        e3x /= sx
        e3y /= sy
        n5 = e5x * e5x + e5y * e5y
        n3 = e3x * e3x + e3y * e3y
        den = (n5 + 0.01 * n3) * 2.0
        if den == 0.0:
            err = 0.0
        else:
            err = h * n5 / math.sqrt(den)
        if not (math.isfinite(xn) and math.isfinite(yn)):
            return x, y, gain, 1
        nsteps += 1
        if nsteps > 2_000_000:
            return x, y, gain, 2
        if err <= 1.0:
            new_th = math.atan2(-yn, xn - a)
            d = new_th - th
            if d > math.pi:
                d -= 2.0 * math.pi
            elif d < -math.pi:
                d += 2.0 * math.pi
            gain += d
            th = new_th
            x = xn
            y = yn
            remaining -= h
            if err == 0.0:
                fac = 10.0
            else:
                fac = min(10.0, 0.9 * err ** (-1.0 / 8.0))
            h = min(hmax, h * fac)
        else:
            h = h * max(0.2, 0.9 * err ** (-1.0 / 8.0))
            if h < 1e-14:
                return x, y, gain, 2
    return x, y, gain, 0


@nb.njit(cache=True, parallel=True)
def propagate(xy0, a_seq, dt_seq, rtol, atol, hmax, A, B, C, E3, E5):
    """Advance every point through all stages.

    Returns states after each stage (n, m, 2), angle gains per stage (n, m)
    and a status code per point.
    """
    n = xy0.shape[0]
    m = a_seq.shape[0]
    out = np.empty((n, m, 2))
    gains = np.zeros((n, m))
    status = np.zeros(n, dtype=np.int64)
    for i in nb.prange(n):
        x = xy0[i, 0]
        y = xy0[i, 1]
        for k in range(m):
            x, y, g, st = _advance(a_seq[k], x, y, dt_seq[k], rtol, atol, hmax, A, B, C, E3, E5)
            out[i, k, 0] = x
            out[i, k, 1] = y
            gains[i, k] = g
            if st != 0:
                status[i] = st
                for kk in range(k + 1, m):
                    out[i, kk, 0] = np.nan
                    out[i, kk, 1] = np.nan
                break
    return out, gains, status


def batch_propagate(xy0, a_seq, dt_seq, rtol=1e-12, atol=1e-15, hmax=0.5):
    xy0 = np.ascontiguousarray(np.asarray(xy0, dtype=float).reshape(-1, 2))
    a_seq = np.ascontiguousarray(np.asarray(a_seq, dtype=float).ravel())
    dt_seq = np.ascontiguousarray(np.asarray(dt_seq, dtype=float).ravel())
    return propagate(xy0, a_seq, dt_seq, float(rtol), float(atol), float(hmax), A, B, C, E3, E5)

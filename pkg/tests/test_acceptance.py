"""Acceptance criteria 1-10, one PASS/FAIL line each.

Oracles are computed independently of the code under test wherever that
is possible (bisection roots, closed forms, direct ODE transit times,
zero counts read off the returned trajectories).
"""

import filecmp
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import record
from nagumo_sap import cli
from nagumo_sap.connections import connect
from nagumo_sap.errors import NagumoError
from nagumo_sap.flow import ConstantProfile, StepProfile, integrate, xprime_zeros
from nagumo_sap.itinerary import Itinerary, analyze, periodic_solution, realize_finite, validate
from nagumo_sap.manifolds import (
    ManifoldKind,
    curve_distance,
    graph_window,
    saddle_exponent,
    stable_continuum,
    unstable_continuum,
)
from nagumo_sap.phase_core import (
    critical_levels,
    homoclinic_apex,
    linked,
    period,
    potential,
    time_of_flight,
    turning_point,
)
from nagumo_sap.stretch import eps_star, run_relation, standard_relations


def _F(a, x):
    return -x ** 4 / 4 + (1 + a) * x ** 3 / 3 - a * x ** 2 / 2


def _energy(a, xy):
    x = np.clip(xy[:, 0], 0.0, 1.0)
    return 0.5 * xy[:, 1] ** 2 + _F(a, x)


# ------------------------------------------------------------------ 1

def test_c1_energy_conservation():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        a = float(rng.choice([0.3, 0.4, 0.5, 0.6, 0.7]))
        p0 = (rng.uniform(0.0, 1.0), rng.uniform(-0.25, 0.25))
        dur = rng.uniform(1.0, 200.0)
        traj = integrate(ConstantProfile(a), p0, 0.0, dur)
        _, zz = traj.dense_samples(4)
        e = _energy(a, zz)
        worst = max(worst, float(np.max(np.abs(e - e[0]))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and dt < 10.0
    record("1", ok, f"max drift {worst:.3g} (< 1e-9), {dt:.2f} s (< 10 s)")
    assert ok


# ------------------------------------------------------------------ 2

def test_c2_apex_and_linking():
    errs = []
    for a, exact in ((0.4, 2 / 3), (0.6, 1 / 3)):
        # the apex is the nonzero root of F_a - (homoclinic saddle level) on the loop side
        if a < 0.5:
            level, lo, hi = 0.0, a, 1.0 - 1e-9
        else:
            level, lo, hi = _F(a, 1.0), 1e-9, a
        root = brentq(lambda x: _F(a, x) - level, lo, hi, xtol=1e-15, rtol=1e-15)
        got = homoclinic_apex(a)
        errs.append(max(abs(got - root), abs(got - exact)))
    ok_apex = max(errs) < 1e-12
    ok_link = linked(0.4, 0.6) is True and linked(0.3, 0.7) is False
    ok = ok_apex and ok_link
    record("2", ok, f"apex error {max(errs):.2g} (< 1e-12); linked(0.4,0.6)={linked(0.4, 0.6)}, "
                    f"linked(0.3,0.7)={linked(0.3, 0.7)}")
    assert ok


# ------------------------------------------------------------------ 3

def _transit_time(a, c, x_lo, x_hi):
    y0 = math.sqrt(max(2.0 * (c - _F(a, x_lo)), 0.0))
    guess = time_of_flight(a, c, x_lo, x_hi)
    traj = integrate(ConstantProfile(a), (x_lo, y0), 0.0, 1.5 * guess + 1.0, rtol=1e-12, atol=1e-14)
    tt, zz = traj.dense_samples(16)
    i = int(np.argmax(zz[:, 0] >= x_hi))
    if zz[i, 0] < x_hi:
        return math.nan
    if i == 0:
        return 0.0
    return brentq(lambda t: traj(t)[0] - x_hi, tt[i - 1], tt[i], xtol=1e-14)


def test_c3_quadrature_vs_ode():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        a = float(rng.uniform(0.25, 0.75))
        lv = critical_levels(a)
        top = min(lv.saddle0, lv.saddle1)
        c = lv.center + rng.uniform(0.1, 0.9) * (top - lv.center)
        # turning points of the closed orbit at level c
        xl = brentq(lambda x: _F(a, x) - c, 0.0, a) if _F(a, 0.0) > c else 0.0
        xr = brentq(lambda x: _F(a, x) - c, a, 1.0)
        u, v = np.sort(rng.uniform(0.0, 1.0, 2))
        x_lo = xl + u * (xr - xl) if rng.uniform() < 0.7 else xl
        x_hi = xl + v * (xr - xl) if rng.uniform() < 0.7 else xr
        if x_hi - x_lo < 1e-3:
            x_hi = min(xr, x_lo + 0.1 * (xr - xl))
        q = time_of_flight(a, c, x_lo, x_hi)
        o = _transit_time(a, c, x_lo, x_hi if x_hi < xr else xr - 1e-12)
        worst = max(worst, abs(q - o) / o)
    p_err = 0.0
    for a in (0.3, 0.4, 0.5, 0.6, 0.7):
        p_small = period(a, a + 1e-3)
        p_err = max(p_err, abs(p_small - 2 * math.pi / math.sqrt(a * (1 - a))) / p_small)
    ok = worst < 1e-6 and p_err < 1e-4
    record("3", ok, f"time-of-flight rel err {worst:.2g} (< 1e-6); small-amplitude period rel err {p_err:.2g} (< 1e-4)")
    assert ok


# ------------------------------------------------------------------ 4

def test_c4_threshold_structure():
    th = analyze(0.4, 0.6).thresholds
    P = max(th.period_plus, th.period_minus)
    slopes = [th.T2_star(n + 1) - th.T2_star(n) for n in range(1, 8)]
    intercept = [th.T2_star(n) - n * P for n in range(1, 8)]
    affine = max(abs(s - P) / P for s in slopes) < 1e-9 and np.ptp(intercept) <= 1e-9 * P
    eps = [eps_star(M, 1.0, th) for M in range(1, 9)]
    nonincr = all(e2 <= e1 for e1, e2 in zip(eps, eps[1:]))
    lin = all(abs(eps_star(M, d, th) - d * eps_star(M, 1.0, th)) <= 1e-15 * d for M in (1, 3) for d in (0.5, 2.0, 7.0))
    conn = all(eps_star(M, 1.0, th, "connection") <= eps_star(M, 1.0, th, "chaos") for M in range(1, 9))
    ok = affine and nonincr and lin and conn
    record("4", ok, f"T2* affine slope=period {affine}; eps* nonincreasing {nonincr}, linear in delta {lin}; "
                    f"connection <= chaos {conn}")
    assert ok


# ------------------------------------------------------------------ 5

def test_c5_stretching_suite():
    t0 = time.perf_counter()
    rel_ok, ctrl_passes, names = True, [], []
    for am, ap in ((0.4, 0.6), (0.3, 0.7)):
        g = analyze(am, ap)
        th = g.thresholds
        for rel in standard_relations(am, ap, 1.1 * th.T1_star, 1.1 * th.T2_star(3), 3):
            rep = run_relation(rel, g.rects, path_budget=5)
            rel_ok &= rep.passed
            if not rep.passed:
                names.append(f"{rel.name}@({am},{ap})")
        ctrl = standard_relations(am, ap, 0.5 * th.T1_star, 1.1 * th.T2_star(3), 3)[0]
        ctrl_passes.append(run_relation(ctrl, g.rects, path_budget=5).passed)
    dt = time.perf_counter() - t0
    ok = rel_ok and not any(ctrl_passes) and dt < 120.0
    record("5", ok, f"6 relations x 2 pairs pass: {rel_ok} {names}; control at 0.5*T1* passes: {ctrl_passes} "
                    f"(expected False); {dt:.1f} s (< 120 s)")
    assert ok


# ------------------------------------------------------------------ 6

def test_c6_chaos_realization():
    g = analyze(0.4, 0.6)
    M, K = 3, 4
    e = eps_star(M, 1.0, g.thresholds)
    prof = StepProfile.uniform(0.4, 0.6, 1.0, 0.9 * e, -3, 6 * K + 3)
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    good, reasons = 0, []
    for _ in range(10):
        itin = Itinerary.of([tuple(int(v) for v in rng.integers(1, M + 1, 2)) for _ in range(K)], M)
        try:
            res = realize_finite(prof, itin, M=M, geometry=g)
            v = validate(res, itin, profile=prof, geometry=g, first_block=1)
            if v["passed"]:
                good += 1
            else:
                reasons.append("validation")
        except NagumoError as exc:
            reasons.append(type(exc).__name__)
    dt = time.perf_counter() - t0
    ok = good == 10 and dt < 300.0
    record("6", ok, f"{good}/10 itineraries realized and validated; failures {sorted(set(reasons))}; {dt:.1f} s")
    assert ok


# ------------------------------------------------------------------ 7

def test_c7_periodic_case():
    g = analyze(0.4, 0.6)
    gaps6 = (1.0, 1.25, 1.0, 1.0, 1.25, 1.0)
    out = []
    ok = True
    for blocks, M in (([(1, 1)], 1), ([(1, 2), (2, 1)], 2)):
        itin = Itinerary.of(blocks, M)
        e = eps_star(M, 1.0, g.thresholds)
        prof = StepProfile.periodic(0.4, 0.6, gaps6, 0.9 * e, -3, 12 * itin.K + 9, delta=1.0)
        try:
            res = periodic_solution(prof, itin, M=M, geometry=g)
            this = res.residual < 1e-8 and res.shift_distance is not None and res.shift_distance < 1e-6
            out.append(f"l={itin.K}: residual {res.residual:.2g}, shift {res.shift_distance}")
        except NagumoError as exc:
            this = False
            out.append(f"l={itin.K}: {type(exc).__name__}")
        ok &= this
    record("7", ok, "; ".join(out))
    assert ok


# ------------------------------------------------------------------ 8

def _saddle_one_graph(a, x):
    # y^2/2 = F(1) - F(x), expanded in u = 1 - x so the oracle keeps relative precision
    u = 1.0 - x
    g = u * u * ((1 - a) / 2 - (2 - a) * u / 3 + u * u / 4)
    return np.sqrt(2.0 * np.maximum(g, 0.0))


def test_c8_manifolds():
    worst = 0.0
    for a in (0.4, 0.6):
        prof = ConstantProfile(a)
        for fn, which in ((unstable_continuum, 0), (stable_continuum, 0), (unstable_continuum, 1), (stable_continuum, 1)):
            gr = fn(prof, 0.0, which)
            xy = gr.curve.xy
            if which == 0:
                ref = np.sqrt(np.maximum(-2.0 * _F(a, xy[:, 0]), 0.0))
            else:
                ref = _saddle_one_graph(a, xy[:, 0])
            worst = max(worst, float(np.max(np.abs(np.abs(xy[:, 1]) - ref))))
    e = eps_star(1, 1.0, analyze(0.4, 0.6).thresholds, "connection")
    sp = StepProfile.uniform(0.4, 0.6, 1.0, 0.9 * e, -3, 8)
    doubling = 0.0
    signs = True
    for fn, which in ((unstable_continuum, 0), (stable_continuum, 0), (unstable_continuum, 1), (stable_continuum, 1)):
        g1 = fn(sp, sp.t(2), which, 20.0)
        g2 = fn(sp, sp.t(2), which, 40.0)
        doubling = max(doubling, curve_distance(g1, g2))
        lo, hi = g1.graph_window
        xy = g1.curve.xy[1:]
        signs &= bool(np.all(g1.kind.y_sign * xy[:, 1] > 0.0))
        signs &= bool(np.all((xy[:, 0] >= lo - 1e-12) & (xy[:, 0] <= hi + 1e-12)))
    w = graph_window(0.4, 0.6)
    closed = (1.4 - math.sqrt(0.16 - 0.4 + 1.0)) / 3.0
    a0 = abs(w.a_minus_0 - closed) < 1e-6 and abs(w.a_minus_0 - 0.176073) < 1e-6
    ok = worst < 1e-6 and doubling < 1e-8 and signs and a0
    record("8", ok, f"frozen level-set distance {worst:.2g} (< 1e-6); window doubling {doubling:.2g} (< 1e-8); "
                    f"signs {signs}; a-0(0.4) = {w.a_minus_0:.9f}")
    assert ok


# ------------------------------------------------------------------ 9

def _decay_rate(traj, t_lo, t_hi, eq):
    tt, zz = traj.dense_samples(8)
    m = (tt >= t_lo) & (tt <= t_hi)
    d = np.hypot(zz[m, 0] - eq, zz[m, 1])
    keep = (d > 1e-11) & (d < 1e-3)
    if keep.sum() < 8:
        return None
    return abs(float(np.polyfit(tt[m][keep], np.log(d[keep]), 1)[0]))


def _check_connection(prof, itin, kind, g):
    res = connect(prof, itin, kind, M=max(itin.K, 1), geometry=g)
    traj = res.trajectory
    K = itin.K
    ta, tb = traj.t_min, traj.t_max
    tail_start = prof.t(6 * K) if kind == "heteroclinic" else prof.t(6 * K + 1)
    head = xprime_zeros(traj, ta, prof.t(0))
    tail = xprime_zeros(traj, tail_start, tb)
    ok = not head and not tail
    if kind == "homoclinic":
        ok &= len(xprime_zeros(traj, prof.t(6 * K), prof.t(6 * K + 1))) == 1
    terminal = 1.0 if kind == "heteroclinic" else 0.0
    r0 = float(np.hypot(*traj(ta)))
    r1 = float(np.hypot(traj(tb)[0] - terminal, traj(tb)[1]))
    ok &= r0 < 1e-4 and r1 < 1e-4
    cert = res.validation
    rel = []
    for end, (lo, hi), eq in (("start", (ta, prof.t(-1)), 0), ("end", (prof.t(6 * K + 1), tb), int(terminal))):
        fit = cert["decay"][end]
        rate = _decay_rate(traj, lo, hi, eq)
        expected = saddle_exponent(fit["a"], eq)
        if rate is None:
            # too close to the saddle for global coordinates: fall back on the local-frame fit
            rate = fit["fitted"]
        rel.append(abs(rate - expected) / expected if rate else math.inf)
    ok &= max(rel) <= 0.1 and cert["passed"]
    return ok, f"{kind} K={K}: tail zeros {len(head)}/{len(tail)}, residuals {r0:.1g}/{r1:.1g}, decay err {max(rel):.2g}"


def test_c9_connections():
    g = analyze(0.4, 0.6)
    t0 = time.perf_counter()
    parts, ok = [], True
    for blocks, kind in (([], "heteroclinic"), ([(1, 1)], "homoclinic")):
        M = 1
        itin = Itinerary.of(blocks, M)
        e = eps_star(M, 1.0, g.thresholds, "connection")
        prof = StepProfile.uniform(0.4, 0.6, 1.0, 0.9 * e, -3, 6 * itin.K + 3)
        try:
            this, msg = _check_connection(prof, itin, kind, g)
        except NagumoError as exc:
            this, msg = False, f"{kind} K={itin.K}: {type(exc).__name__}: {str(exc)[:80]}"
        ok &= this
        parts.append(msg)
    dt = time.perf_counter() - t0
    ok &= dt < 120.0
    record("9", ok, "; ".join(parts) + f"; {dt:.1f} s")
    assert ok


# ------------------------------------------------------------------ 10

CONFIGS = {
    "thresholds": {"a_minus": 0.4, "a_plus": 0.6, "M_values": [1, 2, 3]},
    "portrait": {"systems": [0.4, 0.6], "n_levels": 3, "points_per_curve": 101},
    "verify-stretch": {"a_minus": 0.4, "a_plus": 0.6, "compositions": False},
    "chaos": {"a_minus": 0.4, "a_plus": 0.6, "epsilon": "auto", "M": 1, "itinerary": [[1, 1]]},
    "connect": {"a_minus": 0.4, "a_plus": 0.6, "epsilon": "auto", "M": 1, "kind": "heteroclinic"},
}


def _run_all(root: Path) -> dict:
    codes = {}
    for name, cfg in CONFIGS.items():
        path = root / f"{name}.json"
        path.write_text(json.dumps(cfg))
        codes[name] = cli.main([name, "--config", str(path), "--out", str(root / name)])
    return codes


def test_c10_determinism(tmp_path):
    for d in ("run1", "run2"):
        (tmp_path / d).mkdir()
    c1 = _run_all(tmp_path / "run1")
    c2 = _run_all(tmp_path / "run2")
    same = c1 == c2
    files = 0
    for name in CONFIGS:
        d1, d2 = tmp_path / "run1" / name, tmp_path / "run2" / name
        names = sorted(p.relative_to(d1) for p in d1.rglob("*") if p.is_file())
        names2 = sorted(p.relative_to(d2) for p in d2.rglob("*") if p.is_file())
        same &= names == names2
        for rel in names:
            files += 1
            same &= filecmp.cmp(d1 / rel, d2 / rel, shallow=False)
    record("10", same, f"{files} report files byte-identical across two runs; exit codes {c1}")
    assert same

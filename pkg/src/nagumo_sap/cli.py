"""Command line entry point: ``nagumo-sap <command> --config cfg.json --out dir``.

Every command writes a JSON report (17 significant digits, fixed key
order, the resolved configuration embedded) plus CSV data where relevant.
Exit status: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import NagumoError, ValidationError
from .flow import StepProfile
from .phase_core import classify_level, critical_levels, potential
from .stretch import (
    LoopTwistMap,
    eps_star,
    run_relation,
    standard_relations,
    verify_composition,
)

SCHEMA_VERSION = "1.0"
EPS_FRACTION = 0.9
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


# ------------------------------------------------------------------ JSON

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), (str, int)):
        return obj.value
    return obj


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in o) and len(o) <= 8:
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return _fmt_float(o)
        return json.dumps(o)

    return enc(_plain(obj), 0) + "\n"


def write_report(out: Path, name: str, command: str, config: dict, body: dict, status: str) -> Path:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "status": status, "config": config}
    doc.update(body)
    path = out / name
    path.write_text(dumps(doc))
    return path


# ---------------------------------------------------------------- config

def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    return cfg


def _num(cfg: dict, key: str, default=None, kind=float):
    v = cfg.get(key, default)
    if v is None:
        raise ValidationError(f"missing config field {key!r}")
    try:
        out = kind(v)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"field {key!r} must be a number") from exc
    if kind is float and not math.isfinite(out):
        raise ValidationError(f"field {key!r} must be finite")
    if kind is int and out != v:
        raise ValidationError(f"field {key!r} must be an integer")
    return out


def _weights(cfg: dict) -> tuple[float, float]:
    am, ap = _num(cfg, "a_minus"), _num(cfg, "a_plus")
    if not (0.0 < am < 0.5 < ap < 1.0):
        raise ValidationError("need 0 < a_minus < 1/2 < a_plus < 1")
    return am, ap


def _switch_times(cfg: dict, default_first: int, default_last: int) -> tuple[np.ndarray, int, dict]:
    """Switch times s_k and the first index; the dict records how they were produced."""
    grid = cfg.get("switch_times", {"delta": 1.0})
    if isinstance(grid, list):
        s = np.asarray(grid, float)
        first = _num(cfg, "first_index", 0, int)
        return s, first, {"explicit": True}
    if not isinstance(grid, dict):
        raise ValidationError("switch_times must be a list or a generator object")
    first = int(grid.get("first_index", default_first))
    count = int(grid.get("count", default_last - first + 1))
    if count < 2:
        raise ValidationError("switch_times generator needs count >= 2")
    ks = np.arange(first, first + count)
    if "gaps6" in grid:
        g = np.asarray(grid["gaps6"], float)
        if g.shape != (6,) or np.any(g <= 0.0):
            raise ValidationError("gaps6 must list six positive gaps")
        offs = np.concatenate([[0.0], np.cumsum(g)])
        s = np.array([(k // 6) * g.sum() + offs[k % 6] for k in ks])
        gen = {"gaps6": g.tolist(), "first_index": first, "count": count}
    else:
        delta = _num(grid, "delta", 1.0)
        if not delta > 0.0:
            raise ValidationError("delta must be positive")
        s = ks * delta
        gen = {"delta": delta, "first_index": first, "count": count}
    return s, first, gen


def resolve_profile(cfg: dict, M: int, mode: str, default_first: int, default_last: int):
    """StepProfile with epsilon resolved ("auto" -> 0.9 eps*(M) in `mode`)."""
    from .itinerary import analyze

    am, ap = _weights(cfg)
    s, first, gen = _switch_times(cfg, default_first, default_last)
    gaps = np.diff(s)
    if gaps.size == 0 or np.any(gaps <= 0.0):
        raise ValidationError("switch times must increase strictly")
    delta = float(cfg.get("delta", gaps.min()))
    geom = analyze(am, ap)
    e_star = eps_star(M, delta, geom.thresholds, mode)
    eps = cfg.get("epsilon", "auto")
    if eps == "auto":
        frac = _num(cfg, "epsilon_fraction", EPS_FRACTION)
        eps = frac * e_star
    else:
        eps = _num(cfg, "epsilon")
    prof = StepProfile(am, ap, s, delta, eps, first)
    resolved = {"a_minus": am, "a_plus": ap, "switch_times": gen, "first_index": first, "delta": delta,
                "epsilon": eps, "epsilon_requested": cfg.get("epsilon", "auto"), "eps_star": e_star,
                "eps_star_mode": mode, "M": M}
    return prof, geom, resolved


def _itinerary(cfg: dict, M: int | None):
    from .itinerary import Itinerary

    raw = cfg.get("itinerary", [])
    if not isinstance(raw, list):
        raise ValidationError("itinerary must be a list of [n_plus, n_minus] pairs")
    return Itinerary.of(raw, M)


# -------------------------------------------------------------- commands

def _level_intervals(a: float, c: float, lo: float, hi: float, n: int = 4001):
    """Maximal x-intervals of [lo, hi] on which c - F_a(x) >= 0."""
    xs = np.linspace(lo, hi, n)
    ok = c - potential(a, xs) >= 0.0
    g = lambda x: c - potential(a, x)
    out = []
    i = 0
    while i < n:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and ok[j + 1]:
            j += 1
        x0 = xs[i] if i == 0 else brentq(g, xs[i - 1], xs[i], xtol=1e-15)
        x1 = xs[j] if j == n - 1 else brentq(g, xs[j], xs[j + 1], xtol=1e-15)
        out.append((float(x0), float(x1)))
        i = j + 1
    return out


def cmd_portrait(cfg: dict, out: Path) -> int:
    systems = cfg.get("systems")
    if systems is None:
        systems = [cfg["a_minus"], cfg["a_plus"]] if "a_minus" in cfg else [0.5]
    box = cfg.get("x_range", [-0.25, 1.25])
    n_extra = int(cfg.get("n_levels", 6))
    npts = int(cfg.get("points_per_curve", 401))
    curves_dir = out / "portrait"
    curves_dir.mkdir(parents=True, exist_ok=True)
    index = []
    for a in systems:
        a = float(a)
        if not 0.0 < a < 1.0:
            raise ValidationError("portrait weights must lie in (0, 1)")
        lv = critical_levels(a)
        levels = cfg.get("levels")
        if levels is None:
            top = max(lv.saddle0, lv.saddle1)
            extra = np.linspace(lv.center, top + (top - lv.center) * 0.5, n_extra + 2)[1:-1]
            levels = sorted(set([lv.saddle0, lv.saddle1] + [float(v) for v in extra]))
        for c in levels:
            c = float(c)
            cls = classify_level(a, c)
            for x0, x1 in _level_intervals(a, c, float(box[0]), float(box[1])):
                th = np.linspace(0.0, math.pi, npts)
                xs = x0 + (x1 - x0) * 0.5 * (1.0 - np.cos(th))
                ys = np.sqrt(2.0 * np.maximum(c - potential(a, xs), 0.0))
                for branch in (1, -1):
                    k = len(index)
                    name = f"curve_{k:04d}.csv"
                    lines = ["x,y"] + [f"{x:.17g},{branch * y:.17g}" for x, y in zip(xs, ys)]
                    (curves_dir / name).write_text("\n".join(lines) + "\n")
                    index.append({"file": f"portrait/{name}", "a": a, "level": c, "class": cls.tag.value,
                                  "case": cls.case.value, "branch": branch, "x_range": [x0, x1]})
    resolved = {"systems": [float(a) for a in systems], "x_range": list(box), "n_levels": n_extra,
                "levels": cfg.get("levels"), "points_per_curve": npts}
    write_report(out, "portrait.json", "portrait", resolved, {"curves": index}, "ok")
    return EXIT_OK


def cmd_thresholds(cfg: dict, out: Path) -> int:
    from .itinerary import analyze

    am, ap = _weights(cfg)
    M_vals = cfg.get("M_values", [cfg.get("M", 3)])
    delta = _num(cfg, "delta", 1.0)
    if not delta > 0.0:
        raise ValidationError("delta must be positive")
    geom = analyze(am, ap)
    th = geom.thresholds
    rows = []
    for M in M_vals:
        M = int(M)
        if M < 1:
            raise ValidationError("M must be at least 1")
        rows.append({"M": M, **th.as_dict(M), "eps_star_chaos": eps_star(M, delta, th, "chaos"),
                     "eps_star_connection": (eps_star(M, delta, th, "connection") if th.tau is not None else None)})
    body = {"thresholds": rows, "geometry": geom.describe()}
    resolved = {"a_minus": am, "a_plus": ap, "delta": delta, "M_values": [int(m) for m in M_vals]}
    write_report(out, "thresholds.json", "thresholds", resolved, body, "ok")
    return EXIT_OK


_COMPOSABLE = (("R2->R3", "R3->R4"), ("R4->R1", "R1->R2"), ("R2->R2", "R2->R3"), ("R4->R4", "R4->R1"),
               ("R1->R2", "R2->R2"), ("R3->R4", "R4->R4"))


def cmd_verify(cfg: dict, out: Path) -> int:
    from .itinerary import analyze

    am, ap = _weights(cfg)
    N = _num(cfg, "N", 3, int)
    factor = _num(cfg, "T_factor", 1.1)
    ctrl = _num(cfg, "control_factor", 0.5)
    budget = _num(cfg, "path_budget", 5, int)
    geom = analyze(am, ap)
    th = geom.thresholds
    T1 = factor * th.T1_star
    T2 = factor * th.T2_star(N)
    rels = standard_relations(am, ap, T1, T2, N)
    reports = {}
    rows = []
    for rel in rels:
        rep = run_relation(rel, geom.rects, path_budget=budget)
        reports[rel.name] = (rel, rep)
        rows.append(rep.as_dict())
    comps = []
    if cfg.get("compositions", True):
        for first, second in _COMPOSABLE:
            (r1, p1), (r2, p2) = reports[first], reports[second]
            rep = verify_composition(p1, p2, r1.fmap, r2.fmap, geom.rects, path_budget=min(budget, 2))
            entry = rep.as_dict()
            entry["name"] = f"{second}∘{first}"
            if isinstance(r2.fmap, LoopTwistMap) and not isinstance(r1.fmap, LoopTwistMap):
                entry["note"] = "twist after a transfer: the low classes need gaps below double resolution"
            comps.append(entry)
    control = standard_relations(am, ap, ctrl * th.T1_star, T2, N)[0]
    c_rep = run_relation(control, geom.rects, path_budget=budget)
    all_pass = all(p.passed for _, p in reports.values())
    body = {
        "T1": T1, "T2": T2, "T1_star": th.T1_star, "T2_star": th.T2_star(N),
        "relations": rows,
        "compositions": comps,
        "control": dict(c_rep.as_dict(), T=ctrl * th.T1_star, expected="no crossing"),
        "summary": {"relations_passed": all_pass, "control_passed": c_rep.passed,
                    "compositions": {c["name"]: c["status"] for c in comps}},
    }
    resolved = {"a_minus": am, "a_plus": ap, "N": N, "T_factor": factor, "control_factor": ctrl,
                "path_budget": budget, "compositions": bool(cfg.get("compositions", True))}
    write_report(out, "stretch.json", "verify-stretch", resolved, body, "ok" if all_pass else "fail")
    width = max(len(n) for n in reports)
    for name, (rel, rep) in reports.items():
        print(f"{name:<{width}}  N={rel.N}  {rep.status.upper()}")
    for c in comps:
        print(f"{c['name']}  N={c['crossing_number_requested']}  {c['status'].upper()}")
    print(f"control T={ctrl:g}*T1*  {'PASS (unexpected)' if c_rep.passed else 'NO CROSSING (expected)'}")
    return EXIT_OK if all_pass else EXIT_NUMERICAL


def cmd_chaos(cfg: dict, out: Path) -> int:
    from .itinerary import periodic_solution, realize_finite

    M = _num(cfg, "M", 3, int)
    itin = _itinerary(cfg, M)
    periodic = bool(cfg.get("periodic", False))
    K = max(itin.K, 1)
    last = 12 * K + 3 if periodic else 6 * K + 3
    prof, geom, resolved = resolve_profile(cfg, M, "chaos", -3, last)
    resolved.update({"itinerary": itin.as_list(), "periodic": periodic})
    if periodic:
        res = periodic_solution(prof, itin, M=M, geometry=geom)
        real = res.realization
        body = {"periodic": res.as_dict()}
        status = "ok" if res.residual < 1e-8 and real and real.validation and real.validation["passed"] else "fail"
    else:
        real = realize_finite(prof, itin, M=M, geometry=geom)
        body = {"realization": real.as_dict()}
        status = "ok" if real.validation["passed"] else "fail"
    if real is not None:
        (out / "trajectory.csv").write_text(real.trajectory.to_csv())
        body["trajectory_csv"] = "trajectory.csv"
    write_report(out, "chaos.json", "chaos", resolved, body, status)
    return EXIT_OK if status == "ok" else EXIT_NUMERICAL


def cmd_connect(cfg: dict, out: Path) -> int:
    from .connections import connect

    M = _num(cfg, "M", 1, int)
    itin = _itinerary(cfg, M)
    kind = cfg.get("kind", "heteroclinic")
    if kind not in ("heteroclinic", "homoclinic"):
        raise ValidationError("kind must be 'heteroclinic' or 'homoclinic'")
    prof, geom, resolved = resolve_profile(cfg, M, "connection", -3, 6 * itin.K + 3)
    resolved.update({"itinerary": itin.as_list(), "kind": kind, "window_length": cfg.get("window_length")})
    res = connect(prof, itin, kind, M=M, geometry=geom, window_length=cfg.get("window_length"))
    (out / "trajectory.csv").write_text(res.trajectory.to_csv())
    status = "ok" if res.validation["passed"] else "fail"
    body = {"connection": res.as_dict(), "trajectory_csv": "trajectory.csv"}
    write_report(out, "connect.json", "connect", resolved, body, status)
    return EXIT_OK if status == "ok" else EXIT_NUMERICAL


COMMANDS = {
    "portrait": (cmd_portrait, "portrait.json"),
    "thresholds": (cmd_thresholds, "thresholds.json"),
    "verify-stretch": (cmd_verify, "stretch.json"),
    "chaos": (cmd_chaos, "chaos.json"),
    "connect": (cmd_connect, "connect.json"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nagumo-sap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", required=True, help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    fn, report = COMMANDS[args.command]
    try:
        cfg = load_config(args.config)
        out.mkdir(parents=True, exist_ok=True)
        return fn(cfg, out)
    except NagumoError as exc:
        code = exc.exit_code
        try:
            out.mkdir(parents=True, exist_ok=True)
            cfg_echo = cfg if "cfg" in locals() else {}
            write_report(out, report, args.command, cfg_echo,
                         {"error": {"type": type(exc).__name__, "message": str(exc)}}, "error")
        except OSError:
            pass
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())

import json

import pytest

from nagumo_sap import cli


def _run(tmp_path, cmd, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    out = tmp_path / "out"
    return cli.main([cmd, "--config", str(path), "--out", str(out)]), out


def test_thresholds_report(tmp_path):
    code, out = _run(tmp_path, "thresholds", {"a_minus": 0.4, "a_plus": 0.6, "M_values": [1, 2]})
    assert code == 0
    text = (out / "thresholds.json").read_text()
    doc = json.loads(text)
    assert doc["schema_version"] == cli.SCHEMA_VERSION
    assert doc["config"]["M_values"] == [1, 2]
    assert "0.40000000000000002" in text  # 17 significant digits


def test_bad_json_exits_2(tmp_path):
    code, out = _run(tmp_path, "thresholds", "{not json")
    assert code == 2


def test_bad_weights_exit_2(tmp_path):
    code, out = _run(tmp_path, "thresholds", {"a_minus": 0.6, "a_plus": 0.4})
    assert code == 2
    assert json.loads((out / "thresholds.json").read_text())["status"] == "error"


def test_bad_itinerary_exit_2(tmp_path):
    code, _ = _run(tmp_path, "chaos", {"a_minus": 0.4, "a_plus": 0.6, "M": 1, "itinerary": [[2, 1]]})
    assert code == 2


def test_auto_epsilon_is_resolved(tmp_path):
    code, out = _run(tmp_path, "connect", {"a_minus": 0.4, "a_plus": 0.6, "epsilon": "auto", "M": 1})
    assert code == 0
    doc = json.loads((out / "connect.json").read_text())
    cfg = doc["config"]
    assert cfg["epsilon"] == pytest.approx(0.9 * cfg["eps_star"], rel=1e-15)
    assert cfg["eps_star_mode"] == "connection"
    assert (out / "trajectory.csv").read_text().startswith("t,x,y\n")


def test_portrait_curves(tmp_path):
    code, out = _run(tmp_path, "portrait", {"systems": [0.4], "n_levels": 2, "points_per_curve": 21})
    assert code == 0
    idx = json.loads((out / "portrait.json").read_text())["curves"]
    tags = {c["class"] for c in idx}
    assert {"HomoclinicUnion", "SaddleManifoldUnion", "InnerArc"} <= tags
    first = (out / idx[0]["file"]).read_text().splitlines()
    assert first[0] == "x,y" and len(first) == 22


def test_dumps_handles_non_finite():
    assert cli.dumps({"a": float("nan"), "b": [1.0, float("inf")]}) == '{\n  "a": "nan",\n  "b": [1, "inf"]\n}\n'

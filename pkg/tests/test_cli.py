import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from sweepplay.bvpath import BVPath, bv_norm_dist, d_inf
from sweepplay.cli import (
    FAMILIES,
    _on_common_grid,
    bv_continuity,
    default_experiment,
    load_corpus,
    main,
    parse_request,
    perturbation,
    time_changes,
)
from sweepplay.errors import ConfigError
from sweepplay.geometry import Ball, interval


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return p


RAMP_REQ = {
    "name": "ramp",
    "Z": interval(-1.0, 1.0).to_dict(),
    "z0": [0.0],
    "u": BVPath([0, 2], [[0], [2]]).to_dict(),
    "grid": {"h": 1e-3},
    "method": "direct",
}


def jump_req():
    u = BVPath([0, 0.5, 1], [[0], [0], [3]], [[0], [3], [3]])
    return {**RAMP_REQ, "name": "jump", "u": u.to_dict(), "grid": {"h": 0.1}}


# ---------------------------------------------------------------- solve


def test_solve_ramp(tmp_path):
    cfg = write(tmp_path, "ramp.json", RAMP_REQ)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    y = BVPath.from_csv(open(tmp_path / "o" / "trajectory_direct.csv"))
    t = np.linspace(0, 2, 401)
    assert np.max(np.abs(y.eval_many(t)[:, 0] - np.maximum(0, t - 1))) <= 2e-3
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert all(c["passed"] for c in report["checks"])


def test_solve_constant_input(tmp_path):
    req = {**RAMP_REQ, "u": BVPath.constant([0.5], 1.0).to_dict(), "z0": [0.25]}
    cfg = write(tmp_path, "c.json", req)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    y = BVPath.from_csv(open(tmp_path / "o" / "trajectory_direct.csv"))
    assert np.allclose(y.right, 0.25) and np.allclose(y.left, 0.25)


def test_solve_jump_writes_double_row_and_both_methods(tmp_path):
    cfg = write(tmp_path, "j.json", jump_req())
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o"), "--method", "both"]) == 0
    rows = (tmp_path / "o" / "trajectory_direct.csv").read_text().splitlines()
    at_jump = [r for r in rows if r.startswith("0.5,")]
    assert len(at_jump) == 2 and at_jump[0].endswith(",0.0") and at_jump[1].endswith(",2.0")
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert {c["method"] for c in report["checks"]} == {"direct", "reparam", "both"}
    out = json.loads((tmp_path / "o" / "output_reparam.json").read_text())
    assert out["metadata"]["method"] == "reparam"


def test_solve_is_deterministic(tmp_path):
    cfg = write(tmp_path, "j.json", jump_req())
    for d in ("a", "b"):
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / d), "--method", "both", "--seed", "3"]) == 0
    for f in ("trajectory_direct.csv", "trajectory_reparam.csv", "output_direct.json", "report.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_output_round_trips(tmp_path):
    cfg = write(tmp_path, "j.json", jump_req())
    main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")])
    from_csv = BVPath.from_csv(open(tmp_path / "o" / "trajectory_direct.csv"))
    from_json = BVPath.from_dict(json.loads((tmp_path / "o" / "output_direct.json").read_text())["trajectory"])
    assert from_csv == from_json


# --------------------------------------------------------- config errors


def test_syntax_error_reports_line(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", '{\n  "Z": {"kind": "ball"},\n  "z0": [0,,]\n}')
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "line 3" in capsys.readouterr().err


def test_schema_error_reports_path(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", {**RAMP_REQ, "grid": {"h": -1}})
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "$.grid" in capsys.readouterr().err


def test_dimension_mismatch_is_config_error():
    with pytest.raises(ConfigError):
        parse_request({**RAMP_REQ, "z0": [0.0, 0.0]})


def test_invalid_initial_state_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "r.json", {**RAMP_REQ, "z0": [4.0]})
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "InvalidInitialState" in capsys.readouterr().err


# ---------------------------------------------------------------- corpus


def test_shipped_corpus_loads():
    reqs = load_corpus()
    assert len(reqs) >= 9
    assert any(r.u.is_continuous for r in reqs) and any(not r.u.is_continuous for r in reqs)


def test_corpus_command_on_small_directory(tmp_path):
    d = tmp_path / "c"
    d.mkdir()
    write(d, "ramp.json", {**RAMP_REQ, "grid": {"h": 1e-2}})
    write(d, "jump.json", jump_req())
    assert main(["corpus", "--config", str(d), "--out", str(tmp_path / "o"), "--h", "0.01"]) == 0
    rep = json.loads((tmp_path / "o" / "corpus_report.json").read_text())
    assert [i["name"] for i in rep["items"]] == ["jump", "ramp"]
    for item in rep["items"]:
        neg = [c for c in item["checks"] if c["name"] == "negative_control_detected"][0]
        assert neg["passed"] and neg["residual"] >= 1


def test_corpus_isolates_failing_items(tmp_path):
    d = tmp_path / "c"
    d.mkdir()
    write(d, "ramp.json", {**RAMP_REQ, "grid": {"h": 1e-2}})
    write(d, "broken.json", {**RAMP_REQ, "name": "broken", "z0": [5.0]})
    assert main(["corpus", "--config", str(d), "--out", str(tmp_path / "o"), "--h", "0.01"]) == 1
    rep = json.loads((tmp_path / "o" / "corpus_report.json").read_text())
    status = {i["name"]: i["passed"] for i in rep["items"]}
    assert status == {"broken": False, "ramp": True}


def test_time_changes_are_onto():
    for g in time_changes(2.0).values():
        assert g.value(0.0) == 0.0 and g.value(g.T) == pytest.approx(2.0) and g.is_continuous


# --------------------------------------------------------- BV continuity


def test_perturbation_distances():
    u = BVPath.from_dict(default_experiment()["u"])
    rng = np.random.default_rng(0)
    for fam in FAMILIES[:-1]:
        for n in (1, 3, 10):
            assert bv_norm_dist(perturbation(u, fam, n, rng), u) == pytest.approx(1 / n, rel=1e-9), fam
    with pytest.raises(ConfigError):
        perturbation(u, "bogus", 1, rng)
    with pytest.raises(ConfigError):
        perturbation(BVPath([0, 1], [[0, 0], [1, 1]]), "jump_size", 1, rng)


def test_unperturbed_input_gives_zeros():
    u = BVPath.from_dict(default_experiment()["u"])
    y, yn = _on_common_grid([0, 0], u, u, Ball([0, 0], 1.0), 1e-2)
    assert d_inf(y, yn) == 0.0 and bv_norm_dist(y, yn) == 0.0


def test_shift_family_bound():
    h = 1e-3
    res = bv_continuity({"families": ["shift"]}, h)
    for r in res["rows"]:
        assert r["output_bv"] <= 2 / r["n"] + 10 * h


def test_bv_continuity_command(tmp_path):
    assert main(["bv-continuity", "--out", str(tmp_path / "o"), "--h", "0.01"]) == 0
    with open(tmp_path / "o" / "bv_continuity.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["family"] for r in rows} == set(FAMILIES)
    assert set(rows[0]) == {"family", "n", "input_bv", "input_dus", "output_dinf", "output_bv", "h"}
    summary = json.loads((tmp_path / "o" / "bv_continuity_summary.json").read_text())
    assert summary["fits"]["staircase"]["flag_strict_only"]
    assert not any(f["flag_strict_only"] for k, f in summary["fits"].items() if k != "staircase")


def test_bv_continuity_rejects_bad_config(tmp_path):
    cfg = write(tmp_path, "e.json", {"ns": [0, 1]})
    assert main(["bv-continuity", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


# ---------------------------------------------------------------- misc


def test_describe_schemas(tmp_path, capsys):
    assert main(["describe-schemas"]) == 0
    schemas = json.loads(capsys.readouterr().out)
    assert set(schemas) == {"convex_set", "bvpath", "set_path", "solve_request", "bv_continuity"}
    assert main(["describe-schemas", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "solve_request.schema.json").exists()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "sweepplay", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "bv-continuity" in out.stdout

import csv
import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from hexrotor import cli
from hexrotor.cli import EXIT_IO, EXIT_OK, EXIT_SINGULARITY, EXIT_SOLVER, EXIT_TIMEOUT, fixture_path, main
from hexrotor.errors import AllStartsFailed
from hexrotor.wrench_model import DesignConfig, selected_design

TABLE = {0.0: (2.000, 0.2798), 0.25: (2.000, 0.2798), 0.5: (1.999, 0.2844),
         0.75: (1.969, 0.3009), 1.0: (1.745, 0.3206)}


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- limits

def test_limits_selected_design(capsys):
    code, out, _ = _run(capsys, "limits", fixture_path("selected_design.json"))
    assert code == EXIT_OK
    res = json.loads(out)
    assert res["f_max"] == pytest.approx(2.0, rel=0.01)
    assert res["rank"] == 6 and res["cond"] > 1


def test_limits_bundled_name_fallback(capsys):
    code, out, _ = _run(capsys, "limits", "selected_design.json")
    assert code == EXIT_OK and "f_max" in json.loads(out)


def test_limits_direction(capsys):
    code, out, _ = _run(capsys, "limits", fixture_path("selected_design.json"), "--direction", "0,0,2")
    res = json.loads(out)
    assert code == EXIT_OK
    assert res["direction"] == [0.0, 0.0, 1.0]
    assert res["f_limit_along"] >= res["f_max"] - 1e-12
    assert res["m_limit_along"] >= res["m_max"] - 1e-12


def test_limits_zero_direction(capsys):
    code, _, err = _run(capsys, "limits", fixture_path("selected_design.json"), "--direction", "0,0,0")
    assert code == EXIT_IO and "nonzero" in err


def test_limits_singular(tmp_path, capsys):
    p = tmp_path / "flat.json"
    DesignConfig.equally_spaced([0.0] * 6, [-1, 1, -1, 1, -1, 1]).save(p)
    code, out, err = _run(capsys, "limits", p)
    assert code == EXIT_SOLVER and "singular" in err and out == ""


@pytest.mark.parametrize("content", ["{not json", '{"propellers": 3}'])
def test_limits_parse_error(tmp_path, capsys, content):
    p = tmp_path / "bad.json"
    p.write_text(content)
    assert _run(capsys, "limits", p)[0] == EXIT_IO


def test_missing_file_and_usage(capsys):
    assert _run(capsys, "limits", "/nonexistent/nothing.json")[0] == EXIT_IO
    assert _run(capsys, "limits")[0] == EXIT_IO
    assert _run(capsys, "bogus")[0] == EXIT_IO
    assert _run(capsys, "limits", "selected_design.json", "--direction", "1,2")[0] == EXIT_IO


# ---------------------------------------------------------------- design

def test_design_five_lambdas(tmp_path, capsys):
    code, out, _ = _run(capsys, "design", "--lambda", "0,0.25,0.5,0.75,1", "--n-starts", 20,
                        "--seed", 0, "--out", tmp_path)
    assert code == EXIT_OK
    rows = _rows(tmp_path / "front.csv")
    assert [float(r["lambda"]) for r in rows] == list(TABLE)
    for r in rows:
        f, m = TABLE[float(r["lambda"])]
        assert float(r["f_max"]) == pytest.approx(f, rel=0.01)
        assert float(r["m_max"]) == pytest.approx(m, rel=0.01)
    res = json.loads(out)
    sel = DesignConfig.load(res["selected_design"])
    assert np.allclose(np.degrees(np.abs(sel.phi)), 55.0)
    assert res["selected_f_max"] == pytest.approx(2.0, rel=0.01)


def test_design_deterministic(tmp_path, capsys):
    for sub in ("a", "b"):
        assert _run(capsys, "design", "--lambda", "0,0.5,1", "--n-starts", 1, "--seed", 7,
                    "--out", tmp_path / sub)[0] == EXIT_OK
    for name in ("front.csv", "selected_design.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_design_config_file(tmp_path, capsys):
    cfg = tmp_path / "settings.json"
    cfg.write_text(json.dumps({"phi_max_deg": 60, "n_starts": 1, "seed": 3, "lambda_grid": [0.0]}))
    assert _run(capsys, "design", "--config", cfg, "--out", tmp_path / "o")[0] == EXIT_OK
    assert len(_rows(tmp_path / "o" / "front.csv")) == 1
    cfg.write_text(json.dumps({"n_sarts": 1}))
    assert _run(capsys, "design", "--config", cfg, "--out", tmp_path / "o")[0] == EXIT_IO
    cfg.write_text(json.dumps({"n_starts": 0}))
    assert _run(capsys, "design", "--config", cfg, "--out", tmp_path / "o")[0] == EXIT_IO


def test_design_optimizer_failure(tmp_path, capsys, monkeypatch):
    def fail(_settings):
        raise AllStartsFailed("no start converged")
    monkeypatch.setattr(cli, "pareto_front", fail)
    code, _, err = _run(capsys, "design", "--lambda", "0", "--out", tmp_path)
    assert code == EXIT_SOLVER and "optimizer failed" in err


def test_design_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert _run(capsys, "design", "--lambda", "0", "--n-starts", 1, "--out", blocker / "sub")[0] == EXIT_IO


# ---------------------------------------------------------------- simulate

def test_simulate_position_step(tmp_path, capsys):
    code, out, _ = _run(capsys, "simulate", "position_step.json", "--out", tmp_path)
    assert code == EXIT_OK
    m = json.loads(out)
    assert max(m["axis_rates"]) - min(m["axis_rates"]) < 1e-6 * max(m["axis_rates"])
    assert (tmp_path / "log.csv").exists()
    assert json.loads((tmp_path / "metrics.json").read_text()) == m


def test_simulate_attitude_step(tmp_path, capsys):
    assert _run(capsys, "simulate", fixture_path("attitude_step.json"), "--out", tmp_path)[0] == EXIT_OK


def test_simulate_payload_vs_noload(tmp_path, capsys):
    settle = {}
    for name in ("noload_mission", "payload_mission"):
        code, out, _ = _run(capsys, "simulate", f"{name}.json", "--out", tmp_path / name)
        assert code == EXIT_OK
        settle[name] = json.loads(out)["total_settling_time"]
    assert settle["payload_mission"] > settle["noload_mission"]


def test_simulate_seed_override(tmp_path, capsys):
    for sub, seed in (("a", 3), ("b", 3), ("c", 4)):
        _run(capsys, "simulate", "noload_mission.json", "--seed", seed, "--out", tmp_path / sub)
    a, b, c = ((tmp_path / s / "log.csv").read_bytes() for s in "abc")
    assert a == b and a != c


def _scenario(tmp_path, **changes):
    data = json.loads(fixture_path("noload_mission.json").read_text())
    data.update(changes)
    p = tmp_path / "sc.json"
    p.write_text(json.dumps(data))
    return p


def test_simulate_timeout(tmp_path, capsys, caplog):
    code, out, _ = _run(capsys, "simulate", _scenario(tmp_path, t_max=0.3), "--out", tmp_path / "o")
    assert code == EXIT_TIMEOUT and json.loads(out)["completed"] is False and "t_max" in caplog.text


def test_simulate_attitude_singularity(tmp_path, capsys, caplog):
    wp = [{"x": [0, 0, 0], "euler_xyz_deg": [180, 0, 0]}]
    code, out, _ = _run(capsys, "simulate", _scenario(tmp_path, waypoints=wp), "--out", tmp_path / "o")
    assert code == EXIT_SINGULARITY and "singularity" in caplog.text
    assert json.loads(out)["steps"] == 0 and (tmp_path / "o" / "log.csv").exists()


def test_simulate_singular_design(tmp_path, capsys):
    flat = DesignConfig.equally_spaced([0.0] * 6, [-1, 1, -1, 1, -1, 1], k1=50, k2=0.5).to_dict()
    assert _run(capsys, "simulate", _scenario(tmp_path, design=flat), "--out", tmp_path / "o")[0] == EXIT_SOLVER


def test_simulate_bad_scenario(tmp_path, capsys):
    p = tmp_path / "sc.json"
    p.write_text(json.dumps({"design": selected_design().to_dict()}))
    assert _run(capsys, "simulate", p, "--out", tmp_path / "o")[0] == EXIT_IO


@pytest.mark.skipif(shutil.which("hexctl") is None, reason="console script not installed")
def test_console_script_streams():
    proc = subprocess.run(["hexctl", "limits", "selected_design.json"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stderr == ""
    assert math.isclose(json.loads(proc.stdout)["f_max"], 2.0, rel_tol=0.01)
    proc = subprocess.run(["hexctl", "limits", "/nonexistent.json"], capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stdout == "" and "error" in proc.stderr

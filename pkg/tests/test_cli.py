import csv
import io
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from decoq import runner
from decoq.cli import EXIT_CAPACITY, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main
from decoq.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def cfg(name):
    return str(CONFIGS / name)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_json(tmp_path, obj, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def report_rows(text):
    return dict(csv.reader(io.StringIO(text)))


# --- td -------------------------------------------------------------------


def test_td_fock(capsys):
    code, out, _ = run(capsys, "td", "--config", cfg("fig1_fock.json"))
    assert code == EXIT_OK
    rows = report_rows(out)
    assert abs(float(rows["td"]) - 0.18898) < 5e-6
    assert rows["model"] == "pure_dephasing"


@pytest.mark.parametrize("name", ["spin_boson_uncoupled.json", "cavity_coherent_T0.json", "pd_pole.json"])
def test_td_unbounded(capsys, name):
    code, out, _ = run(capsys, "td", "--config", cfg(name))
    assert code == EXIT_OK
    assert "UNBOUNDED" in out


def test_json_report_round_trip(capsys):
    code, out, _ = run(capsys, "td", "--config", cfg("spin_boson.json"))
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["command"] == "td" and report["td"] > 0
    assert runner.to_json(report) == out


def test_out_file(tmp_path, capsys):
    target = tmp_path / "sub" / "td.csv"
    code, out, _ = run(capsys, "td", "--config", cfg("fig1_fock.json"), "--out", str(target))
    assert code == EXIT_OK and out == ""
    assert target.read_text().startswith("quantity,value\n")


# --- config errors and exit codes ----------------------------------------


def test_missing_config_file(capsys):
    code, _, err = run(capsys, "td", "--config", "/nonexistent/x.json")
    assert code == EXIT_CONFIG and "file not found" in err


def test_config_flag_required(capsys):
    assert run(capsys, "td")[0] == EXIT_CONFIG


def test_bad_workers(capsys):
    assert run(capsys, "sweep", "--config", cfg("sweep_strong.json"), "--workers", "0")[0] == EXIT_CONFIG


@pytest.mark.parametrize(
    "mutate,path",
    [
        (lambda c: c["model"]["pure_dephasing"].update(gg=1), "model.pure_dephasing.gg"),
        (lambda c: c["model"]["pure_dephasing"]["boson"].update(kind="glauber"), "model.pure_dephasing.boson"),
        (lambda c: c["model"]["pure_dephasing"].update(g="one"), "model.pure_dephasing.g"),
        (lambda c: c["run"].update(steps=4), "run.steps"),
        (lambda c: c.update(output={"format": "xml"}), "output.format"),
        (lambda c: c["model"]["pure_dephasing"]["qubit"].pop("theta"), "model.pure_dephasing.qubit.theta"),
    ],
)
def test_schema_errors_name_field(tmp_path, capsys, mutate, path):
    c = json.loads(Path(cfg("fig1_fock.json")).read_text())
    mutate(c)
    code, _, err = run(capsys, "td", "--config", write_json(tmp_path, c))
    assert code == EXIT_CONFIG
    assert path in err


def test_two_model_variants_rejected():
    c = json.loads(Path(cfg("fig1_fock.json")).read_text())
    c["model"]["spin_boson"] = {}
    with pytest.raises(ConfigError):
        parse_config(c)


def test_truncation_error_exit_code(tmp_path, capsys):
    c = json.loads(Path(cfg("fig1_squeezed.json")).read_text())
    c["model"]["pure_dephasing"]["boson"]["truncation"] = 60
    code, _, err = run(capsys, "simulate", "--config", write_json(tmp_path, c))
    assert code == EXIT_CAPACITY and "truncation >= 83" in err


def test_capacity_error_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("DECOQ_DIM_CAP", "64")
    code, _, err = run(capsys, "simulate", "--config", cfg("fig1_fock.json"))
    assert code == EXIT_CAPACITY and "cap" in err.lower()


# --- validate -------------------------------------------------------------


def test_validate_fock_passes(capsys):
    code, out, _ = run(capsys, "validate", "--config", cfg("fig1_fock.json"))
    rows = report_rows(out)
    assert code == EXIT_OK and rows["status"] == "PASS"
    for key in ("s2_direct", "s2_eq3", "s2_fd"):
        assert abs(float(rows[key]) - 28) < 0.28


def test_validate_commuting_reports_third_order(capsys):
    code, out, _ = run(capsys, "validate", "--config", cfg("pd_pole.json"))
    rows = report_rows(out)
    assert code == EXIT_OK and rows["status"] == "PASS" and rows["commuting"] == "True"
    assert "s3_fd" in rows
    assert abs(float(rows["s2_fd"])) <= 1e-8


def test_validate_coarse_grid_fails(capsys):
    code, out, _ = run(capsys, "validate", "--config", cfg("fig1_fock_coarse.json"))
    rows = report_rows(out)
    assert code == EXIT_FAIL and rows["status"] == "FAIL"
    assert "refine the grid" in rows["reason"]


def test_validate_spin_boson(capsys):
    code, out, _ = run(capsys, "validate", "--config", cfg("spin_boson.json"))
    assert code == EXIT_OK and json.loads(out)["status"] == "PASS"


# --- simulate -------------------------------------------------------------


def _series_from_csv(text):
    lines = text.split("\n")
    assert lines[0] == "t,entropy" and lines[-1] == ""
    return np.array([[float(x) for x in ln.split(",")] for ln in lines[1:-1]])


def test_simulate_fock_early_segment_monotone(capsys):
    code, out, _ = run(capsys, "simulate", "--config", cfg("fig1_fock.json"))
    data = _series_from_csv(out)
    assert code == EXIT_OK and data.shape == (401, 2)
    early = data[data[:, 0] <= 0.3, 1]
    assert np.all(np.diff(early) > 0)


def test_simulate_zero_coupling(tmp_path, capsys):
    c = json.loads(Path(cfg("fig1_fock.json")).read_text())
    c["model"]["pure_dephasing"]["g"] = 0.0
    code, out, _ = run(capsys, "simulate", "--config", write_json(tmp_path, c))
    assert code == EXIT_OK
    assert np.all(_series_from_csv(out)[:, 1] == 0.0)


def test_simulate_json(tmp_path, capsys):
    c = json.loads(Path(cfg("fig1_fock.json")).read_text())
    c["output"] = {"format": "json"}
    code, out, _ = run(capsys, "simulate", "--config", write_json(tmp_path, c))
    doc = json.loads(out)
    assert code == EXIT_OK and len(doc["t"]) == len(doc["entropy"]) == 401
    assert doc["meta"]["time_unit"] == "1/g"


def test_simulate_warns_on_truncation(tmp_path, capsys):
    c = json.loads(Path(cfg("fig1_fock.json")).read_text())
    c["model"]["pure_dephasing"]["boson"]["truncation"] = 10
    code, _, err = run(capsys, "simulate", "--config", write_json(tmp_path, c))
    assert code == EXIT_OK and "increase truncation" in err


def test_simulate_squeezed_crossing_ratio(capsys):
    crossings = {}
    for name in ("fig1_fock.json", "fig1_squeezed.json"):
        _, out, _ = run(capsys, "simulate", "--config", cfg(name))
        data = _series_from_csv(out)
        i = int(np.argmax(data[:, 1] >= 0.05))
        t0, t1, s0, s1 = data[i - 1, 0], data[i, 0], data[i - 1, 1], data[i, 1]
        crossings[name] = t0 + (0.05 - s0) * (t1 - t0) / (s1 - s0)
    ratio = crossings["fig1_squeezed.json"] / crossings["fig1_fock.json"]
    assert abs(ratio - 9.87) <= 0.15 * 9.87


def test_simulate_bytes_deterministic_across_processes(tmp_path):
    outs = []
    for i in range(2):
        target = tmp_path / f"s{i}.csv"
        subprocess.run(
            [sys.executable, "-m", "decoq.cli", "simulate", "--config", cfg("fig1_thermal.json"), "--out", str(target)],
            check=True,
        )
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    assert b"\r" not in outs[0]


# --- fig1 -----------------------------------------------------------------


def test_fig1_outputs(tmp_path, capsys):
    code, out, _ = run(capsys, "fig1", "--out", str(tmp_path))
    assert code == EXIT_OK
    data = {n: _series_from_csv((tmp_path / f"{n}.csv").read_text()) for n in ("fock", "thermal", "squeezed")}
    np.testing.assert_array_equal(data["fock"][:, 0], data["thermal"][:, 0])
    np.testing.assert_array_equal(data["fock"][:, 0], data["squeezed"][:, 0])
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert json.loads(out) == summary
    assert abs(summary["squeezed_to_fock_ratio"] - 9.87) <= 0.15 * 9.87
    # equal variance means equal t^2 terms; separation appears later
    early = (data["fock"][:, 0] > 0) & (data["fock"][:, 0] <= 0.02)
    rel = np.abs(data["thermal"][early, 1] / data["fock"][early, 1] - 1)
    assert np.max(rel) < 0.02
    # squeezed decoheres slowest
    assert np.all(data["squeezed"][1:41, 1] < data["fock"][1:41, 1])


# --- sweep ----------------------------------------------------------------


def _sweep(capsys, name, *extra):
    code, out, err = run(capsys, "sweep", "--config", cfg(name), *extra)
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    return rows, err


def test_sweep_strong_slope(capsys):
    rows, err = _sweep(capsys, "sweep_strong.json", "--workers", "2")
    assert [float(r["parameter"]) for r in rows] == [50, 100, 200, 400, 800]
    assert "td_strong=-0.5" in err
    _, slopes = runner.sweep_rows(load_config(cfg("sweep_strong.json")), 1)
    assert abs(slopes["td_strong"] + 0.5) <= 0.02
    assert abs(slopes["td_full"] - slopes["td_strong"]) <= 0.05 * 0.5


def test_sweep_weak_slope():
    _, slopes = runner.sweep_rows(load_config(cfg("sweep_weak.json")), 1)
    assert abs(slopes["td_weak"] + 1.0) <= 0.02
    assert abs(slopes["td_full"] - slopes["td_weak"]) <= 0.05


def test_sweep_parallel_matches_serial():
    c = load_config(cfg("sweep_strong.json"))
    assert runner.sweep_rows(c, 1) == runner.sweep_rows(c, 3)


def test_single_value_sweep(tmp_path, capsys):
    c = json.loads(Path(cfg("sweep_strong.json")).read_text())
    c["sweep"]["values"] = [100]
    code, out, err = run(capsys, "sweep", "--config", write_json(tmp_path, c))
    assert code == EXIT_OK and len(out.strip().split("\n")) == 2
    assert "slope" not in err


def test_sweep_bad_parameter_path(tmp_path, capsys):
    c = json.loads(Path(cfg("sweep_strong.json")).read_text())
    c["sweep"]["parameter"] = "model.spin_boson.qubit"
    code, _, err = run(capsys, "sweep", "--config", write_json(tmp_path, c))
    assert code == EXIT_CONFIG and "sweep.parameter" in err


def test_sweep_json_round_trip(tmp_path, capsys):
    c = json.loads(Path(cfg("sweep_strong.json")).read_text())
    c["output"] = {"format": "json"}
    code, out, _ = run(capsys, "sweep", "--config", write_json(tmp_path, c), "--workers", "1")
    doc = json.loads(out)
    assert code == EXIT_OK and len(doc["rows"]) == 5 and doc["slopes"]["td_weak"] < 0


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 28.0, 1e-300, math.pi):
        assert float(runner.fmt(x)) == x
    assert runner.fmt(math.inf) == "UNBOUNDED"


def test_backend_env_override(tmp_path):
    env = dict(os.environ, DECOQ_PURE_PYTHON="1")
    res = subprocess.run(
        [sys.executable, "-c", "import decoq; print(decoq.BACKEND)"], env=env, capture_output=True, text=True, check=True
    )
    assert res.stdout.strip() == "python"

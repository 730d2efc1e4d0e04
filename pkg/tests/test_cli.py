import json

import numpy as np
import pytest
from click.testing import CliRunner

from qmcurrents.cli import main

HALF = float(np.sqrt(0.5))


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, data):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_spectrum_writes_csv_and_sidecar(runner, tmp_path):
    cfg = write_config(tmp_path, {"lattice": {"V": 3.0}})
    out = tmp_path / "spec.csv"
    result = runner.invoke(main, ["spectrum", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0] == "k,band,E_analytic,E_numeric"
    assert len(lines) == 7
    sidecar = json.loads((tmp_path / "spec.csv.config.json").read_text())
    assert sidecar["lattice"]["V"] == 3.0
    assert sidecar["lattice"]["t1"] == 1.0  # defaults echoed


def test_csv_floats_have_17_significant_digits(runner, tmp_path):
    cfg = write_config(tmp_path, {"lattice": {"V": 3.0}})
    out = tmp_path / "spec.csv"
    runner.invoke(main, ["spectrum", "--config", cfg, "--out", str(out)])
    row = out.read_text().splitlines()[1].split(",")
    # printed value parses back to the identical double
    value = float(row[3])
    assert format(value, ".17g") == row[3]


def test_config_error_exit_code(runner, tmp_path):
    cfg = write_config(tmp_path, {"lattice": {"cells": 1}})
    result = runner.invoke(main, ["spectrum", "--config", cfg, "--out", str(tmp_path / "x.csv")])
    assert result.exit_code == 2
    result = runner.invoke(
        main, ["spectrum", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x.csv")]
    )
    assert result.exit_code == 2


def test_solver_failure_exit_code(runner, tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "lattice": {"t1": 0.0, "t2": 0.0, "V": 3.0},
            "bath": None,
            "measurement": {"m": [0.0, 0.0, 1.0]},
            "sweep": {"variable": "tau", "values": [1.0]},
        },
    )
    out = tmp_path / "sweep.csv"
    result = runner.invoke(main, ["tau-sweep", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 3
    # the table is still written, with the failure flag set
    lines = out.read_text().splitlines()
    assert lines[1].endswith(",1")


def test_json_format_and_seedless(runner, tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "lattice": {"V": 3.0},
            "sweep": {"variable": "tau", "values": [0.5, 5.0]},
        },
    )
    out = tmp_path / "sweep.json"
    result = runner.invoke(
        main,
        ["tau-sweep", "--config", cfg, "--out", str(out), "--format", "json", "--seedless"],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert payload["columns"][0] == "tau"
    assert len(payload["rows"]) == 2


def test_threads_flag_matches_serial(runner, tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "lattice": {"V": 3.0},
            "sweep": {"variable": "tau", "values": [0.3, 3.0, 30.0]},
        },
    )
    out1, out4 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert runner.invoke(main, ["tau-sweep", "--config", cfg, "--out", str(out1)]).exit_code == 0
    assert (
        runner.invoke(
            main, ["tau-sweep", "--config", cfg, "--out", str(out4), "--threads", "4"]
        ).exit_code
        == 0
    )
    assert out1.read_text() == out4.read_text()


def test_floquet_trace_file(runner, tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "lattice": {"V": 3.0},
            "bath": {"gamma0": 0.01, "temperature": 0.1},
            "measurement": {"m": [0.0, HALF, HALF], "scheme": "floquet"},
            "sweep": {"variable": "tau", "values": [5.0]},
            "floquet": {"trace_tau": 5.0, "trace_points": 16},
        },
    )
    out = tmp_path / "floq.csv"
    result = runner.invoke(main, ["floquet", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0, result.output
    trace = tmp_path / "floq.trace.csv"
    assert trace.exists()
    assert trace.read_text().splitlines()[0] == "t,J_H"


def test_zeno_report_runs(runner, tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "lattice": {"t1": 1.5, "t2": 1.0, "V": 3.0},
            "bath": {"gamma0": 1e-2, "temperature": 0.1},
            "zeno": {"taus": [1e-5]},
        },
    )
    out = tmp_path / "zeno.csv"
    result = runner.invoke(main, ["zeno-report", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0, result.output
    header = out.read_text().splitlines()[0]
    assert header == "section,name,tau,formula,numeric,rel_error"


def test_determinism_across_invocations(runner, tmp_path):
    cfg = write_config(
        tmp_path,
        {"lattice": {"V": 3.0}, "sweep": {"variable": "tau", "values": [1.0, 2.0]}},
    )
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    runner.invoke(main, ["tau-sweep", "--config", cfg, "--out", str(out1)])
    runner.invoke(main, ["tau-sweep", "--config", cfg, "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()

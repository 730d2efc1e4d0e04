import numpy as np
import pytest

from qmcurrents.config import ConfigError, parse_config
from qmcurrents.experiments import (
    default_tau_grid,
    late_displacement_slope,
    measurement_pulse_summary,
    run_bloch_sweep,
    run_floquet,
    run_pulse,
    run_spectrum,
    run_tau_sweep,
    run_zeno_report,
)
from qmcurrents.tables import render_csv, render_json

HALF = np.sqrt(0.5)


def cols(table):
    return {name: idx for idx, name in enumerate(table.columns)}


def test_spectrum_reference_chain():
    table = run_spectrum(parse_config({"lattice": {"V": 3.0}}))
    assert table.columns == ("k", "band", "E_analytic", "E_numeric")
    assert len(table.rows) == 6
    for _, _, ea, en in table.rows:
        assert abs(ea - en) <= 1e-10


def test_spectrum_gapless_points():
    table = run_spectrum(
        parse_config({"lattice": {"t1": 1.0, "t2": 1.0, "V": 0.0, "cells": 4}})
    )
    zeros = [row for row in table.rows if abs(row[2]) <= 1e-12]
    assert len(zeros) == 2


def test_spectrum_rejects_three_site():
    cfg = parse_config({"lattice": {"model": "three_site", "t3": 0.5}})
    with pytest.raises(ConfigError):
        run_spectrum(cfg)


def test_pulse_starts_at_measured_displacement():
    cfg = parse_config(
        {
            "lattice": {"V": 3.0},
            "bath": None,
            "measurement": {"m": [1.0, 0.0, 0.0]},
            "pulse": {"horizon": 5.0, "samples": 40},
        }
    )
    table = run_pulse(cfg)
    summary = measurement_pulse_summary(cfg, window=0.0, samples=1)
    assert table.rows[0][0] == 0.0
    assert table.rows[0][2] == pytest.approx(summary["Q_expect"], abs=1e-12)
    # the current column starts at the post-measurement value
    assert table.rows[0][1] == pytest.approx(summary["J_H_0plus"], abs=1e-12)


def test_displacement_slope_dichotomy_fast_panels():
    """T-eigen measurements give no DC drift; T-breaking ones do."""
    flat = parse_config(
        {"lattice": {"V": 0.0}, "bath": None, "measurement": {"m": [HALF, 0.0, HALF]}}
    )
    assert abs(late_displacement_slope(flat, window=(1e4, 2e4), samples=801)) <= 1e-6
    drift = parse_config(
        {
            "lattice": {"V": 0.0},
            "bath": None,
            "measurement": {"m": [1 / np.sqrt(3)] * 3},
        }
    )
    assert abs(late_displacement_slope(drift, window=(1e4, 2e4), samples=801)) >= 1e-4


def test_bloch_sweep_pulse_mode_zeros():
    cfg = parse_config(
        {
            "lattice": {"V": 0.0},
            "bloch_grid": {"n_theta": 7, "n_phi": 8},
        }
    )
    table = run_bloch_sweep(cfg)
    c = cols(table)
    assert len(table.rows) == (7 - 2) * 8 + 2
    from qmcurrents.symmetry import classify_bloch, predict_selection_rules

    for row in table.rows:
        m = np.array(row[:3])
        rules = predict_selection_rules(classify_bloch(m, h_inversion_symmetric=True))
        if rules.JH_at_0plus_zero:
            assert abs(row[c["J_H_0plus"]]) <= 1e-10
        if rules.Q_zero:
            assert abs(row[c["Q_expect"]]) <= 1e-10
    # poles measure position: displacement identically zero
    for row in (table.rows[0], table.rows[-1]):
        assert abs(row[c["Q_expect"]]) <= 1e-16


def test_bloch_sweep_broken_inversion_t_locus():
    """With V != 0 only the time-reversal locus forces a vanishing pulse current."""
    cfg = parse_config(
        {
            "lattice": {"V": 3.0},
            "bloch_grid": {"n_theta": 7, "n_phi": 8},
        }
    )
    table = run_bloch_sweep(cfg)
    c = cols(table)
    nonzero = 0
    for row in table.rows:
        m = np.array(row[:3])
        t_image = np.array([m[0], -m[1], m[2]])
        t_eigen = min(np.max(np.abs(t_image - m)), np.max(np.abs(t_image + m))) <= 1e-10
        if t_eigen:
            assert abs(row[c["J_H_0plus"]]) <= 1e-10
        elif abs(row[c["J_H_0plus"]]) > 1e-4:
            nonzero += 1
        # position measurement keeps zero displacement even at broken inversion
        if abs(abs(m[2]) - 1.0) <= 1e-12:
            assert abs(row[c["Q_expect"]]) <= 1e-16
    assert nonzero > 10


def test_bloch_sweep_zeno_mode_structure():
    cfg = parse_config(
        {
            "lattice": {"t1": 1.5, "t2": 1.0, "V": 3.0},
            "bath": {"gamma0": 1e-2, "temperature": 0.1},
            "bloch_grid": {"n_theta": 5, "n_phi": 6, "mode": "zeno"},
        }
    )
    table = run_bloch_sweep(cfg)
    c = cols(table)
    by_m = {tuple(np.round(row[:3], 12)): row for row in table.rows}
    for key, row in by_m.items():
        if abs(key[1]) <= 1e-12:
            assert abs(row[c["J_H_zeno"]]) <= 1e-15
        flipped = (key[0], -key[1], key[2])
        if flipped in by_m:
            assert by_m[flipped][c["J_H_zeno"]] == pytest.approx(-row[c["J_H_zeno"]], abs=1e-12)
        assert row[c["J_meas_zeno"]] == -row[c["J_H_zeno"]]


def test_tau_sweep_records_and_diagnostics():
    cfg = parse_config(
        {
            "lattice": {"V": 3.0},
            "sweep": {"variable": "tau", "log_start": 1e-2, "log_stop": 1e2, "points": 9},
        }
    )
    table = run_tau_sweep(cfg)
    c = cols(table)
    assert table.columns[0] == "tau"
    assert not table.any_failed
    for row in table.rows:
        assert row[c["steady_state_residual"]] <= 1e-8
        assert row[c["null_space_gap"]] > 1e-8
        assert row[c["J_total"]] == pytest.approx(
            row[c["J_H"]] + row[c["J_meas"]] + row[c["J_dis"]], abs=1e-12
        )


def test_tau_sweep_default_grid_spans_scales():
    cfg = parse_config({"lattice": {"V": 3.0}})
    grid = default_tau_grid(cfg)
    assert len(grid) == 60
    from qmcurrents.lattice import build_hamiltonian, eigendecompose

    norm = eigendecompose(build_hamiltonian(cfg.lattice.to_spec())).norm
    tz = cfg.bath.gamma0 / norm**2
    assert grid[0] == pytest.approx(0.1 * tz, rel=1e-9)
    assert grid[-1] == pytest.approx(100 / cfg.bath.gamma0, rel=1e-9)


def test_v_sweep_antisymmetric_for_inversion_eigen_observable():
    cfg = parse_config(
        {
            "measurement": {"m": [0.0, HALF, HALF], "tau": 1000.0},
            "sweep": {"variable": "V", "values": [-3.0, 3.0]},
        }
    )
    table = run_tau_sweep(cfg)
    c = cols(table)
    j_minus, j_plus = table.rows[0][c["J_total"]], table.rows[1][c["J_total"]]
    assert j_plus == pytest.approx(-j_minus, abs=1e-8)


def test_sweep_variable_validation():
    with pytest.raises(ConfigError):
        run_tau_sweep(
            parse_config(
                {"sweep": {"variable": "alpha", "values": [0.5]}}
            )
        )
    with pytest.raises(ConfigError):
        run_tau_sweep(
            parse_config(
                {"bath": None, "sweep": {"variable": "gamma0", "values": [0.5]}}
            )
        )
    cfg = parse_config({"measurement": {"scheme": "floquet"}})
    with pytest.raises(ConfigError):
        run_tau_sweep(cfg)


def test_angle_sweep_runs():
    cfg = parse_config(
        {
            "lattice": {"V": 3.0},
            "sweep": {"variable": "m_theta", "values": [0.3, 1.2, 2.0]},
        }
    )
    table = run_tau_sweep(cfg)
    assert table.columns[0] == "m_theta"
    assert len(table.rows) == 3


def test_gamma_sweep_runs():
    cfg = parse_config(
        {
            "lattice": {"V": 3.0},
            "sweep": {"variable": "gamma0", "values": [1e-3, 1e-2]},
        }
    )
    table = run_tau_sweep(cfg)
    assert len(table.rows) == 2
    assert not table.any_failed


def test_determinism_and_threads():
    cfg_dict = {
        "lattice": {"V": 3.0},
        "sweep": {"variable": "tau", "log_start": 0.1, "log_stop": 10.0, "points": 6},
    }
    t1 = run_tau_sweep(parse_config(cfg_dict))
    t2 = run_tau_sweep(parse_config(cfg_dict))
    assert render_csv(t1) == render_csv(t2)
    assert render_json(t1) == render_json(t2)
    t4 = run_tau_sweep(parse_config({**cfg_dict, "threads": 4}))
    assert render_csv(t1) == render_csv(t4)


def test_failed_rows_flagged():
    cfg = parse_config(
        {
            "lattice": {"t1": 0.0, "t2": 0.0, "V": 3.0},
            "bath": None,
            "measurement": {"m": [0.0, 0.0, 1.0]},
            "sweep": {"variable": "tau", "values": [1.0]},
        }
    )
    table = run_tau_sweep(cfg)
    assert table.any_failed
    c = cols(table)
    assert table.rows[0][c["failed"]] is True
    assert table.rows[0][c["J_H"]] is None


def test_floquet_records_and_trace():
    cfg = parse_config(
        {
            "lattice": {"V": 1.5, "cells": 4},
            "bath": {"gamma0": 0.5, "temperature": 0.2},
            "measurement": {"m": [0.0, HALF, HALF], "scheme": "floquet"},
            "sweep": {"variable": "tau", "values": [0.05, 1.0, 20.0]},
            "floquet": {"trace_tau": 20.0, "trace_points": 600},
        }
    )
    table, trace = run_floquet(cfg)
    assert len(table.rows) == 3
    assert not table.any_failed
    assert trace is not None and trace.columns == ("t", "J_H")
    # oscillations within the period decay at a rate of order gamma0
    ts = np.array([r[0] for r in trace.rows])
    js = np.array([r[1] for r in trace.rows])
    peaks = [
        i
        for i in range(1, len(js) - 1)
        if abs(js[i]) > abs(js[i - 1]) and abs(js[i]) > abs(js[i + 1])
    ]
    tp, ap = ts[peaks], np.abs(js)[peaks]
    window = tp <= 3.0 / 0.5
    assert window.sum() >= 3
    rate = -np.polyfit(tp[window], np.log(ap[window]), 1)[0]
    assert 0.5 / 2 <= rate <= 0.5 * 2


def test_floquet_scheme_required():
    with pytest.raises(ConfigError):
        run_floquet(parse_config({"sweep": {"variable": "tau", "values": [1.0]}}))


def test_zeno_report_two_site():
    cfg = parse_config(
        {
            "lattice": {"t1": 1.5, "t2": 1.0, "V": 3.0},
            "bath": {"gamma0": 1e-2, "temperature": 0.1},
            "zeno": {"taus": [1e-6]},
        }
    )
    table = run_zeno_report(cfg)
    sections = {row[0] for row in table.rows}
    assert sections == {"scales", "two_site"}
    for row in table.rows:
        if row[0] == "two_site":
            assert row[5] is not None and row[5] <= 1e-2


def test_zeno_report_three_site_loop():
    cfg = parse_config(
        {
            "lattice": {"model": "three_site", "t1": 1.5, "t2": 1.0, "t3": 0.7, "V": 3.0},
            "bath": {"gamma0": 1e-2, "temperature": 0.1},
            "measurement": {"kind": "three_site", "alpha": np.pi / 2},
            "zeno": {"taus": [1e-6]},
        }
    )
    table = run_zeno_report(cfg)
    named = {(row[0], row[1]): row for row in table.rows if row[0] == "three_site"}
    loop = named[("three_site", "loop_12")]
    assert abs(loop[3]) > 1e-3  # formula value nonzero at alpha = pi/2
    assert loop[5] <= 2e-2
    assert named[("three_site", "loop_13")][3] == pytest.approx(-loop[3], abs=1e-15)

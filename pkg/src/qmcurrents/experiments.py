"""Experiment drivers: deterministic tables from a single configuration.

Each runner is a pure function of its config.  Grid points are
independent; with ``threads > 1`` they are evaluated by a thread pool
and the output rows are emitted in grid order regardless of completion
order, so the tables are byte-identical for identical configs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import (
    ConfigError,
    ExperimentConfig,
    spherical_to_unit,
    unit_to_spherical,
)
from .currents import (
    adjoint_hamiltonian,
    adjoint_measurement,
    bond_current,
    current_report,
    dc_current,
    displacement_trace,
    dissipative_current_operator,
    entropy_and_gap,
    hamiltonian_current_operator,
    unitary_current_series,
)
from .lattice import (
    LatticeSpec,
    SpectralData,
    allowed_wavevectors,
    analytic_spectrum,
    build_hamiltonian,
    eigendecompose,
    position_operator,
)
from .lindblad import (
    BathSpec,
    SolverError,
    SpectralPropagator,
    Superoperator,
    build_dissipator,
    build_full_lindbladian,
    build_measurement_lindbladian,
    hamiltonian_superoperator,
    kernel_vector,
    kraus_superoperator,
    steady_state_with_diagnostics,
    thermal_jump_operators,
    thermal_state,
    unvec,
    vec,
)
from .measurement import (
    FLOQUET,
    MeasurementSpec,
    POISSON,
    ProjectorSet,
    build_projectors,
    charge_displacement_operator,
    kraus_map,
)
from .operators import DensityMatrix, QOperator, expectation
from .zeno import (
    left_weight,
    regime_scales,
    solve_balance,
    three_site_populations,
    three_site_zeno,
    transition_rates,
    two_site_closed_form,
)

RECORD_COLUMNS = (
    "J_H",
    "J_meas",
    "J_dis",
    "J_total",
    "Q_expect",
    "entropy",
    "entropy_gap",
    "steady_state_residual",
    "null_space_gap",
    "failed",
)


@dataclass(frozen=True)
class Table:
    """Column-labelled rows plus the resolved config that produced them."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    config: dict

    @property
    def any_failed(self) -> bool:
        if "failed" not in self.columns:
            return False
        idx = self.columns.index("failed")
        return any(bool(row[idx]) for row in self.rows)


@dataclass(frozen=True)
class Assembly:
    """All operators needed to run one parameter point."""

    lattice: LatticeSpec
    h: QOperator
    spectral: SpectralData
    x: QOperator
    j_h: QOperator
    proj: ProjectorSet
    q: QOperator
    meas: MeasurementSpec
    bath: BathSpec | None
    jumps: list[QOperator]
    j_dis: QOperator | None

    @property
    def lind_hd(self) -> Superoperator:
        total = hamiltonian_superoperator(self.h)
        if self.jumps:
            total = total + build_dissipator(self.jumps)
        return total


def assemble(cfg: ExperimentConfig) -> Assembly:
    lattice = cfg.lattice.to_spec()
    meas = cfg.measurement.to_spec()
    if meas.cell_size != lattice.cell_size:
        raise ConfigError(
            f"{cfg.measurement.kind} measurement does not fit a {cfg.lattice.model} lattice"
        )
    h = build_hamiltonian(lattice)
    spectral = eigendecompose(h)
    x = position_operator(lattice)
    j_h = hamiltonian_current_operator(h, x)
    proj = build_projectors(meas, lattice)
    q = charge_displacement_operator(proj, x)
    bath = cfg.bath.to_spec() if cfg.bath is not None else None
    jumps = thermal_jump_operators(spectral, bath) if bath is not None else []
    j_dis = dissipative_current_operator(jumps, x) if jumps else None
    return Assembly(
        lattice=lattice,
        h=h,
        spectral=spectral,
        x=x,
        j_h=j_h,
        proj=proj,
        q=q,
        meas=meas,
        bath=bath,
        jumps=jumps,
        j_dis=j_dis,
    )


def _with_sweep_value(cfg: ExperimentConfig, variable: str, value: float) -> ExperimentConfig:
    if variable == "tau":
        return cfg.model_copy(
            update={"measurement": cfg.measurement.model_copy(update={"tau": value})}
        )
    if variable == "V":
        return cfg.model_copy(update={"lattice": cfg.lattice.model_copy(update={"V": value})})
    if variable == "gamma0":
        if cfg.bath is None:
            raise ConfigError("cannot sweep gamma0 without a bath section")
        return cfg.model_copy(update={"bath": cfg.bath.model_copy(update={"gamma0": value})})
    if variable == "alpha":
        if cfg.measurement.kind != "three_site":
            raise ConfigError("alpha sweeps require a three-site measurement")
        return cfg.model_copy(
            update={"measurement": cfg.measurement.model_copy(update={"alpha": value})}
        )
    if variable in ("m_theta", "m_phi"):
        if cfg.measurement.kind != "bloch":
            raise ConfigError("angle sweeps require a bloch measurement")
        theta, phi = unit_to_spherical(cfg.measurement.m)
        theta, phi = (value, phi) if variable == "m_theta" else (theta, value)
        return cfg.model_copy(
            update={"measurement": cfg.measurement.model_copy(update={"m": spherical_to_unit(theta, phi)})}
        )
    raise ConfigError(f"unknown sweep variable {variable!r}")


def default_tau_grid(cfg: ExperimentConfig, points: int = 60) -> list[float]:
    """Log grid spanning [0.1 tau_Z, 100 tau_R] for the configured bath."""
    if cfg.bath is None:
        raise ConfigError("a default tau grid needs a bath (to set the scales)")
    spectral = eigendecompose(build_hamiltonian(cfg.lattice.to_spec()))
    tz, tr, _ = regime_scales(spectral.norm, cfg.bath.gamma0)
    return list(np.logspace(math.log10(0.1 * tz), math.log10(100 * tr), points))


def _sweep_grid(cfg: ExperimentConfig, require_tau_default: bool) -> tuple[str, list[float]]:
    if cfg.sweep is None:
        if not require_tau_default:
            raise ConfigError("this experiment needs a sweep section")
        return "tau", default_tau_grid(cfg)
    grid = cfg.sweep.grid()
    if grid is None:
        if cfg.sweep.variable != "tau":
            raise ConfigError(f"no default grid for sweep variable {cfg.sweep.variable!r}")
        grid = default_tau_grid(cfg, cfg.sweep.points)
    return cfg.sweep.variable, grid


def _map_points(fn, values, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, values))
    return [fn(v) for v in values]


def _failed_row(value: float) -> tuple:
    return (value,) + (None,) * (len(RECORD_COLUMNS) - 1) + (True,)


# ---------------------------------------------------------------------------
# spectrum


def run_spectrum(cfg: ExperimentConfig) -> Table:
    """Analytic band energies against the dense eigensolver."""
    lattice = cfg.lattice.to_spec()
    if lattice.model != "two_site":
        raise ConfigError("the spectrum experiment needs the two-site model (closed-form bands)")
    spectral = eigendecompose(build_hamiltonian(lattice))
    entries = []
    for k in allowed_wavevectors(lattice):
        for band in (-1, 1):
            entries.append((float(k), band, analytic_spectrum(lattice, k, band)))
    order = np.argsort([e[2] for e in entries], kind="stable")
    numeric = np.empty(len(entries))
    for pos, idx in enumerate(order):
        numeric[idx] = spectral.energies[pos]
    rows = tuple(
        (k, band, e_analytic, float(numeric[i]))
        for i, (k, band, e_analytic) in enumerate(entries)
    )
    return Table(columns=("k", "band", "E_analytic", "E_numeric"), rows=rows, config=cfg.resolved())


# ---------------------------------------------------------------------------
# single-measurement pulse


def run_pulse(cfg: ExperimentConfig) -> Table:
    """Displacement trace after one measurement of the Gibbs state."""
    asm = assemble(cfg)
    temperature = cfg.bath.temperature if cfg.bath is not None else 0.1
    rho_eq = thermal_state(asm.spectral, temperature)
    dt = cfg.pulse.dt
    if dt is None:
        dt = min(0.01 / asm.spectral.norm, asm.meas.tau / 100)
    series = displacement_trace(
        rho_eq, asm.lind_hd, asm.proj, asm.j_h, asm.q, cfg.pulse.horizon, dt
    )
    stride = max(1, len(series.times) // cfg.pulse.samples)
    idx = list(range(0, len(series.times), stride))
    if idx[-1] != len(series.times) - 1:
        idx.append(len(series.times) - 1)
    rows = tuple(
        (float(series.times[i]), float(series.j_h[i]), float(series.displacement[i])) for i in idx
    )
    return Table(columns=("t", "J_H", "displacement"), rows=rows, config=cfg.resolved())


def measurement_pulse_summary(
    cfg: ExperimentConfig, window: float = 40.0, samples: int = 400
) -> dict:
    """Post-measurement current observables from the Gibbs state.

    Returns the current right after the measurement, its maximum
    magnitude over an observation window of unitary evolution, the
    non-decaying (DC) part, and the measurement displacement.
    """
    asm = assemble(cfg)
    temperature = cfg.bath.temperature if cfg.bath is not None else 0.1
    rho_eq = thermal_state(asm.spectral, temperature)
    rho_post = kraus_map(rho_eq, asm.proj)
    times = np.linspace(0.0, window, samples)
    current, _ = unitary_current_series(rho_post, asm.spectral, asm.j_h, times)
    return {
        "J_H_0plus": expectation(asm.j_h, rho_post),
        "J_H_max": float(np.abs(current).max()),
        "J_H_DC": dc_current(rho_post, asm.spectral, asm.j_h),
        "Q_expect": expectation(asm.q, rho_eq),
    }


def late_displacement_slope(
    cfg: ExperimentConfig, window: tuple[float, float] = (1e4, 2e4), samples: int = 2001
) -> float:
    """Least-squares slope of the displacement trace over a late window.

    Valid for measurement-free evolution after the pulse (no bath), where
    the exact spectral form of the running integral is available; the
    oscillatory parts average out of the fit, leaving the DC component.
    """
    if cfg.bath is not None:
        raise ConfigError("late_displacement_slope assumes a closed system (bath: null)")
    asm = assemble(cfg)
    rho_eq = thermal_state(asm.spectral, 0.1 if cfg.bath is None else cfg.bath.temperature)
    rho_post = kraus_map(rho_eq, asm.proj)
    times = np.linspace(window[0], window[1], samples)
    _, integral = unitary_current_series(rho_post, asm.spectral, asm.j_h, times)
    disp = integral + expectation(asm.q, rho_eq)
    slope = np.polyfit(times, disp, 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# sphere sweeps


def _sphere_grid(n_theta: int, n_phi: int) -> list[tuple[float, float]]:
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = np.linspace(0.0, 2 * math.pi, n_phi, endpoint=False)
    pts = [(0.0, 0.0)]
    pts += [(float(t), float(p)) for t in thetas[1:-1] for p in phis]
    pts.append((math.pi, 0.0))
    return pts


def run_bloch_sweep(cfg: ExperimentConfig) -> Table:
    """Currents over the sphere of two-site observables.

    ``mode="pulse"`` reports the post-measurement current and the
    displacement expectation for a single measurement of the Gibbs
    state; ``mode="zeno"`` reports the fast-measurement closed-form
    currents driven by the balance-equation occupations.
    """
    if cfg.measurement.kind != "bloch":
        raise ConfigError("bloch sweeps need a bloch measurement")
    lattice = cfg.lattice.to_spec()
    h = build_hamiltonian(lattice)
    spectral = eigendecompose(h)
    x = position_operator(lattice)
    j_h = hamiltonian_current_operator(h, x)
    mode = cfg.bloch_grid.mode
    temperature = cfg.bath.temperature if cfg.bath is not None else 0.1
    rho_eq = thermal_state(spectral, temperature)
    jumps = (
        thermal_jump_operators(spectral, cfg.bath.to_spec()) if cfg.bath is not None else []
    )
    if mode == "zeno" and not jumps:
        raise ConfigError("the zeno sweep needs a bath (occupations come from bath rates)")

    def point(angles: tuple[float, float]) -> tuple:
        theta, phi = angles
        m = spherical_to_unit(theta, phi)
        meas = MeasurementSpec(kind="bloch", m=m, tau=cfg.measurement.tau)
        proj = build_projectors(meas, lattice)
        if mode == "pulse":
            rho_post = kraus_map(rho_eq, proj)
            q = charge_displacement_operator(proj, x)
            return m + (expectation(j_h, rho_post), expectation(q, rho_eq))
        weights = solve_balance(transition_rates(jumps, proj))
        w_left = left_weight(weights, proj)
        jh, jm = two_site_closed_form(lattice.t1, lattice.V, np.array(m), w_left)
        return m + (jh, jm, w_left)

    grid = _sphere_grid(cfg.bloch_grid.n_theta, cfg.bloch_grid.n_phi)
    rows = tuple(_map_points(point, grid, cfg.threads))
    columns = (
        ("m_x", "m_y", "m_z", "J_H_0plus", "Q_expect")
        if mode == "pulse"
        else ("m_x", "m_y", "m_z", "J_H_zeno", "J_meas_zeno", "w_left")
    )
    return Table(columns=columns, rows=rows, config=cfg.resolved())


# ---------------------------------------------------------------------------
# steady-state sweeps (Poisson scheme)


def _steady_record(point_cfg: ExperimentConfig, value: float) -> tuple:
    asm = assemble(point_cfg)
    tau = asm.meas.tau
    lind = build_full_lindbladian(asm.h, asm.proj, tau, asm.jumps)
    try:
        rho, residual, gap = steady_state_with_diagnostics(lind)
    except SolverError:
        return _failed_row(value)
    rep = current_report(rho, asm.j_h, asm.q, tau, asm.j_dis)
    return (
        value,
        rep.J_H,
        rep.J_meas,
        rep.J_dis,
        rep.J_total,
        rep.Q_expect,
        rep.entropy,
        rep.entropy_gap,
        residual,
        gap,
        False,
    )


def run_tau_sweep(cfg: ExperimentConfig) -> Table:
    """Steady-state currents along a parameter grid under Poisson measurements."""
    if cfg.measurement.scheme != POISSON:
        raise ConfigError("the tau-sweep experiment uses the poisson scheme")
    variable, grid = _sweep_grid(cfg, require_tau_default=True)

    def point(value: float) -> tuple:
        return _steady_record(_with_sweep_value(cfg, variable, value), value)

    rows = tuple(_map_points(point, grid, cfg.threads))
    return Table(columns=(variable,) + RECORD_COLUMNS, rows=rows, config=cfg.resolved())


# ---------------------------------------------------------------------------
# Floquet scheme


def _floquet_record(point_cfg: ExperimentConfig, value: float) -> tuple:
    asm = assemble(point_cfg)
    tau = asm.meas.tau
    lind_hd = asm.lind_hd
    kraus = kraus_superoperator(asm.proj)
    try:
        prop = SpectralPropagator(lind_hd)
        monodromy = kraus.mat @ prop.matrix(tau)
        v, residual, gap = kernel_vector(monodromy - np.eye(asm.h.dim**2))
        if gap <= 1e-8:
            raise SolverError("stroboscopic state not unique")
        rho0 = DensityMatrix.from_matrix(unvec(v))
        integrated = prop.integrate(rho0.mat, tau)
        rho_end = DensityMatrix.from_matrix(unvec(prop.propagate(rho0.mat, tau)))
    except SolverError:
        return _failed_row(value)
    j_h_bar = float(np.trace(integrated @ asm.j_h.mat).real) / tau
    j_dis_bar = (
        float(np.trace(integrated @ asm.j_dis.mat).real) / tau if asm.j_dis is not None else 0.0
    )
    q_end = expectation(asm.q, rho_end)
    s, s_gap = entropy_and_gap(rho0)
    return (
        value,
        j_h_bar,
        q_end / tau,
        j_dis_bar,
        j_h_bar + q_end / tau + j_dis_bar,
        q_end,
        s,
        s_gap,
        residual,
        gap,
        False,
    )


def run_floquet(cfg: ExperimentConfig) -> tuple[Table, Table | None]:
    """Period-averaged currents of the stroboscopic steady state.

    Returns the per-tau record table and, when ``floquet.trace_tau`` is
    set, a second table tracing <J_H>(t) within one period at that tau.
    """
    if cfg.measurement.scheme != FLOQUET:
        raise ConfigError("the floquet experiment uses the floquet scheme")
    variable, grid = _sweep_grid(cfg, require_tau_default=True)

    def point(value: float) -> tuple:
        return _floquet_record(_with_sweep_value(cfg, variable, value), value)

    rows = tuple(_map_points(point, grid, cfg.threads))
    table = Table(columns=(variable,) + RECORD_COLUMNS, rows=rows, config=cfg.resolved())

    trace = None
    if cfg.floquet.trace_tau is not None:
        trace_cfg = _with_sweep_value(cfg, "tau", cfg.floquet.trace_tau)
        asm = assemble(trace_cfg)
        prop = SpectralPropagator(asm.lind_hd)
        monodromy = kraus_superoperator(asm.proj).mat @ prop.matrix(cfg.floquet.trace_tau)
        v, _, gap = kernel_vector(monodromy - np.eye(asm.h.dim**2))
        if gap <= 1e-8:
            raise SolverError("stroboscopic state not unique")
        rho0 = DensityMatrix.from_matrix(unvec(v))
        times = np.linspace(0.0, cfg.floquet.trace_tau, cfg.floquet.trace_points)
        trace_rows = tuple(
            (float(t), float(np.trace(unvec(prop.matrix(t) @ vec(rho0.mat)) @ asm.j_h.mat).real))
            for t in times
        )
        trace = Table(columns=("t", "J_H"), rows=trace_rows, config=trace_cfg.resolved())
    return table, trace


# ---------------------------------------------------------------------------
# Zeno report


def run_zeno_report(cfg: ExperimentConfig) -> Table:
    """Closed forms against the full solver in the fast-measurement limit."""
    asm = assemble(cfg)
    if asm.bath is None:
        raise ConfigError("the zeno report needs a bath")
    tz, tr, tstar = regime_scales(asm.spectral.norm, asm.bath.gamma0)
    rows: list[tuple] = [
        ("scales", "tau_Z", None, tz, None, None),
        ("scales", "tau_R", None, tr, None, None),
        ("scales", "tau_star_estimate", None, tstar, None, None),
    ]
    weights = solve_balance(transition_rates(asm.jumps, asm.proj))

    def rel(formula: float, numeric: float) -> float | None:
        return abs(numeric - formula) / abs(formula) if abs(formula) > 1e-300 else None

    for tau in cfg.zeno.taus:
        lind = build_full_lindbladian(asm.h, asm.proj, tau, asm.jumps)
        rho, _, _ = steady_state_with_diagnostics(lind)
        if asm.lattice.model == "two_site":
            w_left = left_weight(weights, asm.proj)
            jh_f, jm_f = two_site_closed_form(
                asm.lattice.t1, asm.lattice.V, np.array(asm.meas.m), w_left
            )
            jh_n = expectation(asm.j_h, rho)
            jm_n = expectation(asm.q, rho) / tau
            rows.append(("two_site", "J_H", tau, jh_f, jh_n, rel(jh_f, jh_n)))
            rows.append(("two_site", "J_meas", tau, jm_f, jm_n, rel(jm_f, jm_n)))
        else:
            u, du = three_site_populations(weights, asm.proj)
            forms = three_site_zeno(asm.lattice.t1, asm.lattice.t2, asm.meas.alpha, u, du)
            adj_m = adjoint_measurement(asm.proj, tau)
            adj_h = adjoint_hamiltonian(asm.h)
            n = asm.lattice.cells
            numeric = {
                "j_meas_12": n * bond_current(rho, 0, 1, adj_m),
                "j_meas_23": n * bond_current(rho, 1, 2, adj_m),
                "j_meas_13": n * bond_current(rho, 0, 2, adj_m),
                "loop_12": n * (bond_current(rho, 0, 1, adj_m) + bond_current(rho, 0, 1, adj_h)),
                "loop_23": n * (bond_current(rho, 1, 2, adj_m) + bond_current(rho, 1, 2, adj_h)),
                "loop_13": n * (bond_current(rho, 0, 2, adj_m) + bond_current(rho, 0, 2, adj_h)),
                "J_H": expectation(asm.j_h, rho),
            }
            formula = {
                "j_meas_12": forms.j_meas_12,
                "j_meas_23": forms.j_meas_23,
                "j_meas_13": forms.j_meas_13,
                "loop_12": forms.loop,
                "loop_23": forms.loop,
                "loop_13": -forms.loop,
                "J_H": forms.J_H,
            }
            for name in formula:
                rows.append(
                    ("three_site", name, tau, formula[name], numeric[name], rel(formula[name], numeric[name]))
                )
    return Table(
        columns=("section", "name", "tau", "formula", "numeric", "rel_error"),
        rows=tuple(rows),
        config=cfg.resolved(),
    )

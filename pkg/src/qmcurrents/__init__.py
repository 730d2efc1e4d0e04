"""Simulator for measurement-induced currents in monitored lattice chains.

Dense-matrix toolkit covering symmetry selection rules for
measurement-induced currents, Lindblad steady states under Poisson and
Floquet measurement schedules, entropy scaling regimes, and the
fast-measurement (Zeno) closed forms including loop currents.
"""

__version__ = "0.1.0"

from .lattice import (
    LatticeSpec,
    SpectralData,
    analytic_spectrum,
    build_hamiltonian,
    eigendecompose,
    inversion_operator,
    position_operator,
    site_projector,
    time_reverse,
    translation_operator,
)
from .measurement import (
    MeasurementSpec,
    ProjectorSet,
    build_projectors,
    cell_unitary,
    charge_displacement_operator,
    kraus_map,
)
from .operators import DensityMatrix, QOperator, expectation, fidelity
from .symmetry import (
    Parity,
    ParityReport,
    SelectionRules,
    classify_bloch,
    classify_operator,
    predict_selection_rules,
)
from .lindblad import (
    BathSpec,
    Superoperator,
    build_dissipator,
    build_full_lindbladian,
    build_measurement_lindbladian,
    evolve,
    floquet_fixed_point,
    steady_state,
    thermal_jump_operators,
    thermal_state,
)
from .currents import (
    bond_current,
    dc_current,
    displacement_trace,
    dissipative_current_operator,
    entropy_and_gap,
    hamiltonian_current_operator,
    measurement_current_operator,
)
from .zeno import (
    RateMatrix,
    ZenoSolution,
    effective_lindbladian,
    first_order_coherences,
    regime_scales,
    solve_balance,
    solve_zeno,
    three_site_zeno,
    transition_rates,
    two_site_closed_form,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Fast-measurement asymptotics: balance equation, coherence corrections,
degenerate perturbation theory for generators, and the closed-form
steady-state currents of the two- and three-site cells.

When measurements fire much faster than every dynamical scale, the state
pins to the measurement basis and the outcome occupations follow a
classical master equation driven by the bath alone.  The leading
coherences are linear in the measurement time and carry the measurement
current that cancels the Hamiltonian current; within a three-site cell
the cancellation still leaves a circulating loop current.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import csr_matrix

from .lindblad import Superoperator, SolverError
from .measurement import ProjectorSet
from .operators import DensityMatrix, QOperator

BALANCE_GAP_TOL = 1e-12


@dataclass(frozen=True)
class RateMatrix:
    """Classical transition rates between measurement outcomes.

    ``rates[a, b]`` is the rate from outcome a to outcome b; the diagonal
    is zero.
    """

    rates: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.rates, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("rates must be a square matrix")
        if np.any(r < -1e-15):
            raise ValueError("rates must be nonnegative")
        if np.max(np.abs(np.diag(r))) > 1e-15:
            raise ValueError("rate matrix diagonal must be zero")
        r = np.clip(r, 0.0, None)
        np.fill_diagonal(r, 0.0)
        r.setflags(write=False)
        object.__setattr__(self, "rates", r)

    @property
    def n_outcomes(self) -> int:
        return self.rates.shape[0]


@dataclass(frozen=True)
class ZenoSolution:
    """Leading-order steady state in the fast-measurement limit."""

    weights: np.ndarray
    rho0: DensityMatrix
    rho1_offdiag: QOperator
    tau_Z: float
    tau_R: float


def transition_rates(jumps: list[QOperator], proj: ProjectorSet) -> RateMatrix:
    """Bath-induced rates sum_alpha |<a'|L_alpha|a>|^2 between outcomes.

    Requires rank-1 (non-degenerate) outcome projectors; the modulus
    squared makes the result independent of projector phase conventions.
    """
    vecs = proj.outcome_vectors()
    n = len(vecs)
    rates = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            rates[a, b] = sum(
                abs(np.vdot(vecs[b], jump.mat @ vecs[a])) ** 2 for jump in jumps
            )
    return RateMatrix(rates)


def solve_balance(rate_matrix: RateMatrix) -> np.ndarray:
    """Stationary outcome occupations of the classical master equation.

    Solves sum_{a'} w_{a'} T^{a'->a} = w_a sum_{a'} T^{a->a'} for the
    probability vector w.  The rate graph must be strongly connected,
    otherwise the stationary distribution is not unique.
    """
    r = rate_matrix.rates
    n = rate_matrix.n_outcomes
    graph = csr_matrix((r > 0).astype(int))
    n_comp, _ = connected_components(graph, directed=True, connection="strong")
    if n_comp != 1:
        raise SolverError(
            f"rate graph has {n_comp} strongly connected components; stationary weights are not unique"
        )
    generator = r.T - np.diag(r.sum(axis=1))
    _, s, vh = np.linalg.svd(generator)
    if n > 1 and s[-2] <= BALANCE_GAP_TOL:
        raise SolverError("balance equation has a degenerate null space")
    w = vh[-1].real
    w = w / w.sum()
    if w.min() < -1e-12:
        raise SolverError("stationary weights are not a probability vector")
    return np.clip(w, 0.0, None) / np.clip(w, 0.0, None).sum()


def diagonal_state(weights: np.ndarray, proj: ProjectorSet) -> DensityMatrix:
    """sum_a w_a P_a for rank-1 projectors."""
    mat = np.zeros((proj.dim, proj.dim), dtype=complex)
    for w, p in zip(weights, proj.projectors):
        mat += w * p
    return DensityMatrix.from_matrix(mat)


def left_weight(weights: np.ndarray, proj: ProjectorSet) -> float:
    """Total weight of the '+' outcome across cells of a two-site measurement.

    This is the occupation of the transformed left site that enters the
    two-site closed forms.
    """
    if proj.labels is None or proj.cell_size != 2:
        raise ValueError("left_weight needs a labeled two-site projector set")
    return float(sum(w for w, (_, outcome) in zip(weights, proj.labels) if outcome == 0))


def three_site_populations(weights: np.ndarray, proj: ProjectorSet) -> tuple[float, float]:
    """Population parameters (u, du) of the three-outcome cell.

    With per-cell outcome weights (v1, v2, v3) summed over cells,
    u = 3 v3 - 1 and du = 3 (v2 - v1); these parameterize the
    cell-diagonal steady state entering the loop-current formulas.
    """
    if proj.labels is None or proj.cell_size != 3:
        raise ValueError("three_site_populations needs a labeled three-site projector set")
    v = np.zeros(3)
    for w, (_, outcome) in zip(weights, proj.labels):
        v[outcome] += w
    return float(3 * v[2] - 1), float(3 * (v[1] - v[0]))


def first_order_coherences(
    rho0: DensityMatrix, h: QOperator, tau: float, proj: ProjectorSet | None = None
) -> QOperator:
    """Leading off-diagonal correction -i tau [H, rho0].

    For a measurement-diagonal rho0 with rank-1 projectors the commutator
    is automatically off-diagonal in the measurement basis; if a
    projector set is supplied the diagonal part is projected out
    explicitly to guard against slightly impure input.
    """
    c = -1j * tau * (h.mat @ rho0.mat - rho0.mat @ h.mat)
    if proj is not None:
        diag = np.zeros_like(c)
        for p in proj.projectors:
            diag += p @ c @ p
        c = c - diag
    return QOperator(c, hermitian=True)


def solve_zeno(
    h: QOperator,
    jumps: list[QOperator],
    proj: ProjectorSet,
    tau: float,
    gamma0: float,
    norm_h: float,
) -> ZenoSolution:
    """Assemble the leading-order Zeno steady state and its scales."""
    weights = solve_balance(transition_rates(jumps, proj))
    rho0 = diagonal_state(weights, proj)
    rho1 = first_order_coherences(rho0, h, tau, proj)
    tz, tr, _ = regime_scales(norm_h, gamma0)
    return ZenoSolution(weights=weights, rho0=rho0, rho1_offdiag=rho1, tau_Z=tz, tau_R=tr)


def _complement_pseudo_inverse(l0: np.ndarray, p: np.ndarray, gap_tol: float, cutoff: float) -> np.ndarray:
    q = np.eye(l0.shape[0]) - p
    restricted = q @ l0 @ q
    u, s, vh = np.linalg.svd(restricted)
    cutoff = cutoff * max(1.0, float(s[0]))
    kernel_dim = int(np.sum(s <= cutoff))
    kept = s[: restricted.shape[0] - kernel_dim]
    if kept.size and kept.min() <= gap_tol:
        raise SolverError(
            f"generator is gapless on the complement (smallest kept singular value {kept.min():.3e})"
        )
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    pinv = (vh.conj().T * inv) @ u.conj().T
    return q @ pinv @ q


def effective_lindbladian(
    kernel_projector: Superoperator,
    perturbation: Superoperator,
    l0: Superoperator,
    gap_tol: float = 1e-8,
    cutoff: float = 1e-10,
) -> Superoperator:
    """Second-order effective generator on the kernel of l0.

    P V P - P V Q (L0)^{-1} Q V P with the inverse taken on the
    complement of the kernel (singular value cutoff 1e-10).  Raises when
    the nonzero spectrum of l0 is not gapped away from zero.
    """
    p = kernel_projector.mat
    v = perturbation.mat
    scale = max(1.0, float(np.max(np.abs(l0.mat))))
    if max(np.max(np.abs(p @ l0.mat)), np.max(np.abs(l0.mat @ p))) > 1e-8 * scale:
        raise ValueError("kernel_projector does not project onto the kernel of l0")
    pinv = _complement_pseudo_inverse(l0.mat, p, gap_tol, cutoff)
    eff = p @ v @ p - p @ v @ pinv @ v @ p
    return Superoperator(eff, l0.dim)


def energy_block_projector(energies: np.ndarray, states: np.ndarray, tol: float = 1e-8) -> Superoperator:
    """Super-projector onto density matrices diagonal in the energy blocks.

    Levels closer than ``tol`` are grouped into one degenerate block.
    """
    d = energies.size
    blocks = []
    start = 0
    for i in range(1, d + 1):
        if i == d or energies[i] - energies[start] > tol:
            blocks.append(range(start, i))
            start = i
    mat = np.zeros((d * d, d * d), dtype=complex)
    from .lindblad import sandwich

    for block in blocks:
        p = np.zeros((d, d), dtype=complex)
        for i in block:
            p += np.outer(states[:, i], states[:, i].conj())
        mat += sandwich(p, p)
    return Superoperator(mat, d)


def two_site_closed_form(t1: float, V: float, m: np.ndarray, w_left: float) -> tuple[float, float]:
    """Steady-state currents of the dimer cell in the fast-measurement limit.

    The cell Hamiltonian has Bloch vector h = (-t1, 0, V/2); the current
    is -2 (w_left - 1/2) (h x m)_z, which reduces to 2 t1 (w_left - 1/2) m_y,
    and the measurement current cancels it exactly.
    """
    m = np.asarray(m, dtype=float)
    h = np.array([-t1, 0.0, V / 2])
    cross_z = h[0] * m[1] - h[1] * m[0]
    j_h = -2.0 * (w_left - 0.5) * cross_z
    return float(j_h), float(-j_h)


@dataclass(frozen=True)
class ThreeSiteZenoCurrents:
    """Closed-form pairwise currents in the three-site cell."""

    j_meas_12: float
    j_meas_23: float
    j_meas_13: float
    j_h_12: float
    j_h_23: float
    j_h_13: float
    J_H: float
    loop: float

    @property
    def J_meas(self) -> float:
        return self.j_meas_12 + self.j_meas_23 + 2 * self.j_meas_13


def three_site_zeno(t1: float, t2: float, alpha: float, u: float, du: float) -> ThreeSiteZenoCurrents:
    """Pairwise measurement/Hamiltonian currents and the loop current.

    All formulas share the sin(alpha) factor: real measured states carry
    no currents.  The total bond currents are equal around the loop,
    j(1->2) = j(2->3) = -j(1->3), and the space-integrated total
    vanishes while the loop current survives.
    """
    s = np.sin(alpha)
    jm12 = (-2 * (t1 - t2) * u + (4 * t1 + t2) * du) / 18 * s
    jm23 = ((t1 - 4 * t2) * u - (t1 + t2) * du) / 18 * s
    jm13 = (-(t1 + 2 * t2) * u + (t1 - t2) * du) / 18 * s
    jh12 = t1 * (3 * u - 5 * du) / 18 * s
    jh23 = t2 * (6 * u + 2 * du) / 18 * s
    j_h = (3 * (t1 + 2 * t2) * u - (5 * t1 - 2 * t2) * du) / 18 * s
    loop = ((t1 + 2 * t2) * u + (t2 - t1) * du) / 18 * s
    return ThreeSiteZenoCurrents(
        j_meas_12=float(jm12),
        j_meas_23=float(jm23),
        j_meas_13=float(jm13),
        j_h_12=float(jh12),
        j_h_23=float(jh23),
        j_h_13=0.0,
        J_H=float(j_h),
        loop=float(loop),
    )


def regime_scales(norm_h: float, gamma0: float) -> tuple[float, float, float]:
    """(tau_Z, tau_R, tau_star): Zeno onset gamma0/|H|^2, relaxation 1/gamma0,
    and the a-priori entropy-minimum location 1/|H|."""
    if norm_h <= 0 or gamma0 <= 0:
        raise ValueError("norm_h and gamma0 must be positive")
    return gamma0 / norm_h**2, 1.0 / gamma0, 1.0 / norm_h

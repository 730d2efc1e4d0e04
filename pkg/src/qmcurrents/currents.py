"""Current operators, bond-resolved currents, displacement traces, entropy.

Three species of charge flow coexist once measurements and a bath act on
the chain: the familiar commutator current of the unitary dynamics, the
sudden displacement delivered by each measurement (rate Q/tau under a
Poisson schedule), and the flow attributable to the bath jumps.  Only
their sum obeys a continuity equation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .lindblad import Superoperator, vec
from .measurement import ProjectorSet
from .operators import DensityMatrix, QOperator, anticommutator, expectation
from .lattice import SpectralData

AdjointMap = Callable[[np.ndarray], np.ndarray]

DEGENERACY_TOL = 1e-8
ENTROPY_CLAMP = 1e-15


@dataclass(frozen=True)
class CurrentReport:
    """Expectation values of all current species plus entropy diagnostics."""

    J_H: float
    J_meas: float
    J_dis: float
    Q_expect: float
    entropy: float
    entropy_gap: float

    @property
    def J_total(self) -> float:
        return self.J_H + self.J_meas + self.J_dis


def minimal_image(y: int, x: int, dim: int) -> float:
    """Shortest signed displacement from x to y on the ring.

    For even dim, the two images of a half-ring hop are equally short
    and average to zero.
    """
    r = (y - x) % dim
    if 2 * r == dim:
        return 0.0
    return float(r if r <= dim // 2 else r - dim)


def hamiltonian_current_operator(h: QOperator, x_op: QOperator) -> QOperator:
    """Bond-resolved current of the unitary dynamics.

    Sums -i P_y H P_x (y - x) over site pairs with minimal-image
    displacements, which equals i[H, x] on an open chain and stays
    well-defined on the ring.
    """
    if not h.hermitian:
        raise ValueError("hamiltonian_current_operator expects a Hermitian H")
    d = h.dim
    x_sites = np.real(np.diag(x_op.mat))
    j = np.zeros((d, d), dtype=complex)
    for x in range(d):
        for y in range(d):
            if x != y and h.mat[y, x] != 0:
                j[y, x] += -1j * h.mat[y, x] * minimal_image(int(round(x_sites[y])), int(round(x_sites[x])), d)
    return QOperator(j, hermitian=True)


def measurement_current_operator(q_op: QOperator, tau: float) -> QOperator:
    """Q/tau: displacements delivered at the Poisson measurement rate."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return QOperator(q_op.mat / tau, hermitian=True)


def dissipative_current_operator(jumps: list[QOperator], x_op: QOperator) -> QOperator:
    """sum_a (L^dag x L - {x, L^dag L}/2) for the bath jumps."""
    if not jumps:
        raise ValueError("jump list is empty")
    x = x_op.mat
    j = np.zeros_like(x)
    for jump in jumps:
        l = jump.mat
        ldl = l.conj().T @ l
        j += l.conj().T @ x @ l - 0.5 * anticommutator(x, ldl)
    return QOperator(j, hermitian=True)


def adjoint_hamiltonian(h: QOperator) -> AdjointMap:
    return lambda theta: 1j * (h.mat @ theta - theta @ h.mat)


def adjoint_measurement(proj: ProjectorSet, tau: float) -> AdjointMap:
    if tau <= 0:
        raise ValueError("tau must be positive")

    def mapped(theta: np.ndarray) -> np.ndarray:
        out = sum(p @ theta @ p for p in proj.projectors) - theta
        return out / tau

    return mapped


def adjoint_dissipator(jumps: list[QOperator]) -> AdjointMap:
    def mapped(theta: np.ndarray) -> np.ndarray:
        out = np.zeros_like(theta)
        for jump in jumps:
            l = jump.mat
            ldl = l.conj().T @ l
            out += l.conj().T @ theta @ l - 0.5 * anticommutator(ldl, theta)
        return out

    return mapped


def bond_current(rho: DensityMatrix | np.ndarray, x: int, y: int, adjoint: AdjointMap) -> float:
    """Expectation of the site-resolved current x -> y for one generator part.

    Uses ({P_x, dP_y/dt} - {P_y, dP_x/dt})/2 with dP/dt given by the
    adjoint map of the selected Lindbladian piece.
    """
    r = rho.mat if isinstance(rho, DensityMatrix) else rho
    d = r.shape[0]
    if x == y or not (0 <= x < d and 0 <= y < d):
        raise ValueError("bond sites must be distinct and in range")
    px = np.zeros((d, d), dtype=complex)
    py = np.zeros((d, d), dtype=complex)
    px[x, x] = 1.0
    py[y, y] = 1.0
    op = 0.5 * (anticommutator(px, adjoint(py)) - anticommutator(py, adjoint(px)))
    return float(np.trace(r @ op).real)


def integrated_current(rho: DensityMatrix | np.ndarray, adjoint: AdjointMap, dim: int) -> float:
    """sum_{x<y} (y-x) j^{x->y} with minimal-image displacements."""
    total = 0.0
    for x in range(dim):
        for y in range(x + 1, dim):
            w = minimal_image(y, x, dim)
            if w != 0.0:
                total += w * bond_current(rho, x, y, adjoint)
    return total


def occupation_derivative(rho: DensityMatrix | np.ndarray, site: int, adjoint: AdjointMap) -> float:
    """d<n(site)>/dt under the selected generator part."""
    r = rho.mat if isinstance(rho, DensityMatrix) else rho
    d = r.shape[0]
    p = np.zeros((d, d), dtype=complex)
    p[site, site] = 1.0
    return float(np.trace(r @ adjoint(p)).real)


@dataclass(frozen=True)
class DisplacementSeries:
    times: np.ndarray
    j_h: np.ndarray
    displacement: np.ndarray


def displacement_trace(
    rho0: DensityMatrix,
    lind_hd: Superoperator,
    proj: ProjectorSet,
    j_h: QOperator,
    q_op: QOperator,
    horizon: float,
    dt: float,
) -> DisplacementSeries:
    """Total displacement after one measurement of the pre-measurement state.

    The measurement is applied at t = 0, offsetting the trace by <Q> in
    rho0; afterwards <J_H> is accumulated by the trapezoid rule while the
    state evolves under the measurement-free generator.  Each step uses
    the exact matrix-exponential propagator, so dt controls only the
    quadrature error.
    """
    if dt <= 0 or horizon <= 0:
        raise ValueError("horizon and dt must be positive")
    from .measurement import kraus_map

    q0 = expectation(q_op, rho0)
    rho = kraus_map(rho0, proj)
    steps = int(np.ceil(horizon / dt))
    prop = sla.expm(lind_hd.mat * dt)
    # tr(rho J) as a row functional on vec(rho)
    j_row = vec(j_h.mat.T)
    v = vec(rho.mat)
    times = np.empty(steps + 1)
    j_vals = np.empty(steps + 1)
    disp = np.empty(steps + 1)
    times[0], j_vals[0], disp[0] = 0.0, float((j_row @ v).real), q0
    for k in range(1, steps + 1):
        v = prop @ v
        times[k] = k * dt
        j_vals[k] = float((j_row @ v).real)
        disp[k] = disp[k - 1] + 0.5 * dt * (j_vals[k - 1] + j_vals[k])
    return DisplacementSeries(times=times, j_h=j_vals, displacement=disp)


def unitary_current_series(
    rho_post: DensityMatrix, spectral: SpectralData, j_h: QOperator, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """<J_H>(t) and its exact running integral under purely unitary evolution.

    Coherences in the energy eigenbasis rotate at the spectral gaps, so
    both the current and its time integral have closed forms; this is
    what makes very late observation windows cheap.
    """
    u = spectral.states
    rr = u.conj().T @ rho_post.mat @ u
    jj = u.conj().T @ j_h.mat @ u
    omega = np.subtract.outer(spectral.energies, spectral.energies)
    times = np.asarray(times, dtype=float)
    current = np.zeros_like(times)
    integral = np.zeros_like(times)
    d = spectral.dim
    for i in range(d):
        for j in range(d):
            c = rr[i, j] * jj[j, i]
            if abs(c) < 1e-300:
                continue
            om = omega[i, j]
            if abs(om) < 1e-12:
                current += c.real
                integral += (c * times).real
            else:
                current += (c * np.exp(-1j * om * times)).real
                integral += (c * (1 - np.exp(-1j * om * times)) / (1j * om)).real
    return current, integral


def dc_current(rho: DensityMatrix, spectral: SpectralData, current_op: QOperator) -> float:
    """Non-decaying part of the current expectation.

    Projects the state onto the energy-diagonal blocks (levels closer
    than 1e-8 are treated as one degenerate block) before taking the
    expectation; equivalently the infinite-window time average.
    """
    u = spectral.states
    rr = u.conj().T @ rho.mat @ u
    jj = u.conj().T @ current_op.mat @ u
    e = spectral.energies
    total = 0.0
    for i in range(spectral.dim):
        for j in range(spectral.dim):
            if abs(e[i] - e[j]) < DEGENERACY_TOL:
                total += (rr[j, i] * jj[i, j]).real
    return float(total)


def entropy_and_gap(rho: DensityMatrix) -> tuple[float, float]:
    """Von Neumann entropy and its normalized distance from the maximum.

    Eigenvalues are clamped at 1e-15 before the log so that pure states
    return exactly (0, 1).
    """
    ev = rho.eigenvalues
    ev = ev[ev > ENTROPY_CLAMP]
    s = float(-np.sum(ev * np.log(ev)))
    s = max(s, 0.0)
    s_max = float(np.log(rho.dim))
    return s, (s_max - s) / s_max


def current_report(
    rho: DensityMatrix,
    j_h: QOperator,
    q_op: QOperator,
    tau: float,
    j_dis: QOperator | None = None,
) -> CurrentReport:
    """Bundle all steady-state current expectations for one state."""
    s, gap = entropy_and_gap(rho)
    q = expectation(q_op, rho)
    return CurrentReport(
        J_H=expectation(j_h, rho),
        J_meas=q / tau,
        J_dis=expectation(j_dis, rho) if j_dis is not None else 0.0,
        Q_expect=q,
        entropy=s,
        entropy_gap=gap,
    )


__all__ = [
    "CurrentReport",
    "minimal_image",
    "hamiltonian_current_operator",
    "measurement_current_operator",
    "dissipative_current_operator",
    "adjoint_hamiltonian",
    "adjoint_measurement",
    "adjoint_dissipator",
    "bond_current",
    "integrated_current",
    "occupation_derivative",
    "DisplacementSeries",
    "displacement_trace",
    "unitary_current_series",
    "dc_current",
    "entropy_and_gap",
    "current_report",
]

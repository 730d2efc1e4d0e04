"""Lindblad generators, steady states, propagators, and the stroboscopic map.

Superoperators are stored as dense d^2 x d^2 matrices acting on
column-stacked density matrices: vec(rho)[i + d*j] = rho[i, j], so
A rho -> (1 (x) A) vec(rho), rho B -> (B^T (x) 1) vec(rho), and
A rho B -> (B^T (x) A) vec(rho).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .lattice import SpectralData
from .measurement import ProjectorSet
from .operators import DensityMatrix, QOperator

KERNEL_GAP_TOL = 1e-8
RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    """Numerical solve failed (degenerate kernel, residual violation, ...)."""


class NonUniqueSteadyStateError(SolverError):
    pass


@dataclass(frozen=True)
class BathSpec:
    """Overall relaxation rate and temperature of the thermal bath (k_B = 1)."""

    gamma0: float
    temperature: float

    def __post_init__(self) -> None:
        if self.gamma0 <= 0:
            raise ValueError("gamma0 must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


@dataclass(frozen=True)
class Superoperator:
    """Linear map on vectorized operators."""

    mat: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.mat, dtype=complex)
        if arr.shape != (self.dim**2, self.dim**2):
            raise ValueError(f"superoperator shape {arr.shape} does not match dim {self.dim}")
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)

    def __call__(self, rho: np.ndarray | DensityMatrix) -> np.ndarray:
        r = rho.mat if isinstance(rho, DensityMatrix) else rho
        return unvec(self.mat @ vec(r))

    def __add__(self, other: "Superoperator") -> "Superoperator":
        if self.dim != other.dim:
            raise ValueError("superoperator dimension mismatch")
        return Superoperator(self.mat + other.mat, self.dim)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return v.reshape((d, d), order="F")


def spre(a: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(a.shape[0]), a)


def spost(b: np.ndarray) -> np.ndarray:
    return np.kron(b.T, np.eye(b.shape[0]))


def sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix of rho -> a rho b."""
    return np.kron(b.T, a)


def hamiltonian_superoperator(h: QOperator) -> Superoperator:
    """-i[H, .] as a superoperator."""
    return Superoperator(-1j * (spre(h.mat) - spost(h.mat)), h.dim)


def thermal_jump_operators(spectral: SpectralData, bath: BathSpec) -> list[QOperator]:
    """Jump operators connecting every ordered pair of distinct eigenstates.

    Downhill rates are gamma0/N_dim; uphill rates carry the Boltzmann
    factor exp(-dE/T), so the pairwise ratio satisfies detailed balance
    and the dissipator alone thermalizes to the Gibbs state.  The 1/N_dim
    keeps the total relaxation rate finite as the chain grows.  Within
    numerically degenerate multiplets the eigensolver's basis is used.
    """
    energies, states = spectral.energies, spectral.states
    d = spectral.dim
    jumps = []
    for a in range(d):
        for b in range(d):
            if a == b:
                continue
            de = energies[a] - energies[b]
            rate = bath.gamma0 / d if de < 0 else bath.gamma0 / d * np.exp(-de / bath.temperature)
            jumps.append(QOperator(np.sqrt(rate) * np.outer(states[:, a], states[:, b].conj())))
    return jumps


def build_dissipator(jumps: list[QOperator], dim: int | None = None) -> Superoperator:
    """sum_a (L rho L^dag - {L^dag L, rho}/2) in matrix form.

    An empty jump list yields the zero superoperator (dim must then be
    given explicitly).
    """
    if not jumps:
        if dim is None:
            raise ValueError("cannot infer dimension from an empty jump list")
        return zero_superoperator(dim)
    d = jumps[0].dim
    mat = np.zeros((d * d, d * d), dtype=complex)
    for j in jumps:
        if j.dim != d:
            raise ValueError("jump operator dimension mismatch")
        l = j.mat
        ldl = l.conj().T @ l
        mat += sandwich(l, l.conj().T) - 0.5 * (spre(ldl) + spost(ldl))
    return Superoperator(mat, d)


def zero_superoperator(dim: int) -> Superoperator:
    return Superoperator(np.zeros((dim * dim, dim * dim), dtype=complex), dim)


def kraus_superoperator(proj: ProjectorSet) -> Superoperator:
    """The measurement channel rho -> sum_a P_a rho P_a (a super-projector)."""
    d = proj.dim
    mat = np.zeros((d * d, d * d), dtype=complex)
    for p in proj.projectors:
        mat += sandwich(p, p)
    return Superoperator(mat, d)


def build_measurement_lindbladian(proj: ProjectorSet, tau: float) -> Superoperator:
    """(kraus - identity)/tau: decoheres the measurement basis at rate 1/tau."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    d = proj.dim
    return Superoperator((kraus_superoperator(proj).mat - np.eye(d * d)) / tau, d)


def build_full_lindbladian(
    h: QOperator,
    proj: ProjectorSet | None,
    tau: float | None,
    jumps: list[QOperator],
) -> Superoperator:
    """Unitary part plus dissipator plus the measurement channel."""
    total = hamiltonian_superoperator(h)
    if jumps:
        total = total + build_dissipator(jumps)
    if proj is not None:
        if tau is None:
            raise ValueError("a projector set requires a measurement time tau")
        if proj.dim != h.dim:
            raise ValueError("projector set dimension mismatch")
        total = total + build_measurement_lindbladian(proj, tau)
    return total


def kernel_vector(mat: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Best kernel vector of mat with scale-aware residual and gap.

    Returns (vector, residual, gap) where the residual is the max-norm of
    mat @ v divided by max(1, max|mat|): the raw bound is unattainable in
    float64 once the generator carries 1/tau factors of order 1e6.
    """
    _, s, vh = np.linalg.svd(mat)
    v = vh[-1].conj()
    gap = float(s[-2]) if s.size > 1 else np.inf
    scale = max(1.0, float(np.max(np.abs(mat))))
    residual = float(np.max(np.abs(mat @ v))) / scale
    return v, residual, gap


def _kernel_dimension(mat: np.ndarray, tol: float) -> int:
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s <= tol))


def steady_state_with_diagnostics(lind: Superoperator) -> tuple[DensityMatrix, float, float]:
    """Null-space steady state plus (residual, kernel gap) diagnostics.

    The kernel is located by singular value decomposition; the candidate
    is Hermitized and trace-normalized.  A second singular value at or
    below 1e-8 signals a degenerate kernel and raises.
    """
    v, residual, gap = kernel_vector(lind.mat)
    if gap <= KERNEL_GAP_TOL:
        dim = _kernel_dimension(lind.mat, KERNEL_GAP_TOL)
        raise NonUniqueSteadyStateError(
            f"non-unique steady state: kernel dimension {dim} (gap {gap:.3e})"
        )
    if residual > RESIDUAL_TOL:
        raise SolverError(f"steady-state residual {residual:.3e} exceeds {RESIDUAL_TOL}")
    rho = DensityMatrix.from_matrix(unvec(v))
    return rho, residual, gap


def steady_state(lind: Superoperator) -> DensityMatrix:
    rho, _, _ = steady_state_with_diagnostics(lind)
    return rho


def evolve(rho0: DensityMatrix, lind: Superoperator, t: float) -> DensityMatrix:
    """exp(L t) applied to rho0 (scaling-and-squaring matrix exponential)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if rho0.dim != lind.dim:
        raise ValueError("state and generator dimensions do not match")
    if t == 0:
        return rho0
    prop = sla.expm(lind.mat * t)
    return DensityMatrix.from_matrix(unvec(prop @ vec(rho0.mat)))


def thermal_state(spectral: SpectralData, temperature: float) -> DensityMatrix:
    """Gibbs state exp(-H/T)/Z built in the eigenbasis."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    w = np.exp(-(spectral.energies - spectral.energies.min()) / temperature)
    w = w / w.sum()
    mat = (spectral.states * w) @ spectral.states.conj().T
    return DensityMatrix.from_matrix(mat)


def floquet_fixed_point_with_diagnostics(
    lind_hd: Superoperator, proj: ProjectorSet, tau: float
) -> tuple[DensityMatrix, float, float]:
    """Fixed point of the one-period map (measure, then evolve for tau).

    The returned state is the post-measurement state at the start of a
    period; it is the kernel vector of M - 1 with M = kraus . exp(L tau).
    A degenerate eigenvalue-1 space raises.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    d = lind_hd.dim
    monodromy = kraus_superoperator(proj).mat @ sla.expm(lind_hd.mat * tau)
    v, residual, gap = kernel_vector(monodromy - np.eye(d * d))
    if gap <= KERNEL_GAP_TOL:
        dim = _kernel_dimension(monodromy - np.eye(d * d), KERNEL_GAP_TOL)
        raise NonUniqueSteadyStateError(
            f"non-unique stroboscopic state: fixed-point space dimension {dim} (gap {gap:.3e})"
        )
    rho = DensityMatrix.from_matrix(unvec(v))
    return rho, residual, gap


def floquet_fixed_point(lind_hd: Superoperator, proj: ProjectorSet, tau: float) -> DensityMatrix:
    rho, _, _ = floquet_fixed_point_with_diagnostics(lind_hd, proj, tau)
    return rho


class SpectralPropagator:
    """Eigendecomposition of a generator for exact time propagation.

    Provides e^{Lt} rho and the exact time integral int_0^t e^{Ls} rho ds
    without quadrature.  Falls back with an error if the generator is too
    ill-conditioned to diagonalize reliably.
    """

    def __init__(self, lind: Superoperator, cond_limit: float = 1e10):
        self.dim = lind.dim
        evals, right = np.linalg.eig(lind.mat)
        cond = np.linalg.cond(right)
        if cond > cond_limit:
            raise SolverError(f"generator eigenbasis condition number {cond:.2e} too large")
        self.evals = evals
        self.right = right
        self.right_inv = np.linalg.inv(right)

    def matrix(self, t: float) -> np.ndarray:
        """The full propagator e^{Lt} as a d^2 x d^2 matrix."""
        return (self.right * np.exp(self.evals * t)) @ self.right_inv

    def propagate(self, rho: np.ndarray, t: float) -> np.ndarray:
        coeff = self.right_inv @ vec(rho)
        return unvec(self.right @ (np.exp(self.evals * t) * coeff))

    def integrate(self, rho: np.ndarray, t: float) -> np.ndarray:
        """int_0^t e^{Ls}[rho] ds, with (e^{lt}-1)/l -> t on the kernel."""
        lam = self.evals
        phi = np.empty_like(lam)
        small = np.abs(lam) * t < 1e-10
        phi[~small] = (np.exp(lam[~small] * t) - 1.0) / lam[~small]
        phi[small] = t * (1.0 + lam[small] * t / 2.0)
        coeff = self.right_inv @ vec(rho)
        return unvec(self.right @ (phi * coeff))

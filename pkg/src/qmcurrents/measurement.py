"""Projective measurement channels acting cell-by-cell on the chain.

A measurement is specified either by a Bloch vector (two-site cells,
observable m.sigma within each cell combined with the cell location) or
by a phase angle alpha parameterizing a fixed orthonormal triple of
states in a three-site cell.  Both produce a complete set of rank-1
projectors on the full lattice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpec
from .operators import PAULI, DensityMatrix, QOperator

BLOCH = "bloch"
THREE_SITE_PHASE = "three_site"
POISSON = "poisson"
FLOQUET = "floquet"

UNIT_TOL = 1e-12
PROJECTOR_TOL = 1e-12


@dataclass(frozen=True)
class MeasurementSpec:
    """What is measured, how often, and on which schedule."""

    kind: str
    m: tuple[float, float, float] | None = None
    alpha: float | None = None
    tau: float = 1.0
    scheme: str = POISSON

    def __post_init__(self) -> None:
        if self.kind not in (BLOCH, THREE_SITE_PHASE):
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        if self.scheme not in (POISSON, FLOQUET):
            raise ValueError(f"unknown measurement scheme {self.scheme!r}")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.kind == BLOCH:
            if self.m is None:
                raise ValueError("bloch measurement requires the unit vector m")
            m = np.asarray(self.m, dtype=float)
            if m.shape != (3,):
                raise ValueError("m must have three components")
            if abs(np.linalg.norm(m) - 1.0) > UNIT_TOL:
                raise ValueError(f"|m| = {np.linalg.norm(m)} is not 1")
            object.__setattr__(self, "m", tuple(float(x) for x in m))
        else:
            if self.alpha is None:
                raise ValueError("three-site measurement requires alpha")

    @property
    def cell_size(self) -> int:
        return 2 if self.kind == BLOCH else 3


@dataclass(frozen=True)
class ProjectorSet:
    """Complete family of orthogonal projectors on the lattice.

    ``labels[i] = (cell, outcome)`` records which unit cell and which
    intra-cell outcome projector ``projectors[i]`` implements, when the
    set has that structure (custom sets may pass ``labels=None``).
    """

    projectors: tuple[np.ndarray, ...]
    dim: int
    cell_size: int | None = None
    labels: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        projs = tuple(np.asarray(p, dtype=complex) for p in self.projectors)
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for i, p in enumerate(projs):
            if p.shape != (self.dim, self.dim):
                raise ValueError("projector dimension mismatch")
            if np.max(np.abs(p - p.conj().T)) > PROJECTOR_TOL:
                raise ValueError(f"projector {i} is not hermitian")
            if np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
                raise ValueError(f"projector {i} is not idempotent")
            total += p
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                if np.max(np.abs(projs[i] @ projs[j])) > PROJECTOR_TOL:
                    raise ValueError(f"projectors {i} and {j} are not orthogonal")
        if np.max(np.abs(total - np.eye(self.dim))) > PROJECTOR_TOL:
            raise ValueError("projectors do not resolve the identity")
        for p in projs:
            p.setflags(write=False)
        object.__setattr__(self, "projectors", projs)

    def __len__(self) -> int:
        return len(self.projectors)

    def outcome_vectors(self) -> list[np.ndarray]:
        """Unit vectors spanning each projector; requires rank-1 projectors."""
        vecs = []
        for i, p in enumerate(self.projectors):
            w, v = np.linalg.eigh(p)
            if abs(w[-1] - 1.0) > 1e-10 or (w.size > 1 and abs(w[-2]) > 1e-10):
                raise ValueError(f"projector {i} is not rank-1 (degenerate outcome)")
            vecs.append(v[:, -1])
        return vecs


def cell_unitary(m: np.ndarray) -> np.ndarray:
    """2x2 unitary U with U^dag sigma_z U = m.sigma.

    Branch choice: rotation about the axis z x m by the polar angle of
    m; for m = -e_z (axis undefined) a rotation about x by pi.  All
    downstream quantities are independent of this phase convention.
    """
    m = np.asarray(m, dtype=float)
    norm = np.linalg.norm(m)
    if norm < 1e-12:
        raise ValueError("zero vector does not define a measurement axis")
    m = m / norm
    if abs(np.linalg.norm(m) - 1.0) > UNIT_TOL:
        raise ValueError("m must be a unit vector")
    mz = np.clip(m[2], -1.0, 1.0)
    if abs(mz - 1.0) < 1e-15:
        return np.eye(2, dtype=complex)
    if abs(mz + 1.0) < 1e-15:
        axis = np.array([1.0, 0.0, 0.0])
        theta = np.pi
    else:
        axis = np.cross([0.0, 0.0, 1.0], m)
        axis = axis / np.linalg.norm(axis)
        theta = np.arccos(mz)
    n_sigma = sum(axis[i] * PAULI[i] for i in range(3))
    rot = np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * n_sigma
    return rot.conj().T


def _bloch_cell_projectors(m: np.ndarray) -> list[np.ndarray]:
    m_sigma = sum(m[i] * PAULI[i] for i in range(3))
    return [(np.eye(2) + m_sigma) / 2, (np.eye(2) - m_sigma) / 2]


def three_site_cell_states(alpha: float) -> list[np.ndarray]:
    """Orthonormal triple (1, e^{ia}, 1)/sqrt3, (1, -e^{ia}, 0)/sqrt2, (1, e^{ia}, -2)/sqrt6."""
    e = np.exp(1j * alpha)
    return [
        np.array([1, e, 1]) / np.sqrt(3),
        np.array([1, -e, 0]) / np.sqrt(2),
        np.array([1, e, -2]) / np.sqrt(6),
    ]


def build_projectors(spec: MeasurementSpec, lattice: LatticeSpec) -> ProjectorSet:
    """Embed the per-cell outcome projectors into the full lattice.

    For a Bloch measurement the outcomes per cell are ordered (+, -) in
    the m.sigma eigenvalue, so outcome 0 is the state U^dag|first site>.
    """
    if spec.cell_size != lattice.cell_size:
        raise ValueError(
            f"measurement cell size {spec.cell_size} does not match lattice cell size {lattice.cell_size}"
        )
    if spec.kind == BLOCH:
        cell_projs = _bloch_cell_projectors(np.asarray(spec.m, dtype=float))
    else:
        cell_projs = [np.outer(v, v.conj()) for v in three_site_cell_states(spec.alpha)]
    d, s = lattice.dim, lattice.cell_size
    projectors, labels = [], []
    for n in range(lattice.cells):
        for outcome, pc in enumerate(cell_projs):
            p = np.zeros((d, d), dtype=complex)
            p[s * n : s * n + s, s * n : s * n + s] = pc
            projectors.append(p)
            labels.append((n, outcome))
    return ProjectorSet(
        projectors=tuple(projectors), dim=d, cell_size=s, labels=tuple(labels)
    )


def kraus_map(rho: DensityMatrix, proj: ProjectorSet) -> DensityMatrix:
    """Outcome-averaged post-measurement state sum_a P_a rho P_a."""
    if rho.dim != proj.dim:
        raise ValueError("state and projector dimensions do not match")
    out = np.zeros_like(rho.mat)
    for p in proj.projectors:
        out += p @ rho.mat @ p
    return DensityMatrix.from_matrix(out)


def _cell_support(p: np.ndarray, cell_size: int) -> int | None:
    """Index of the single cell block supporting p, or None if nonlocal."""
    rows = np.nonzero(np.abs(p).max(axis=1) > 1e-14)[0]
    if rows.size == 0:
        return None
    cells = set(int(r) // cell_size for r in rows)
    if len(cells) != 1:
        return None
    return cells.pop()


def charge_displacement_operator(proj: ProjectorSet, x_op: QOperator) -> QOperator:
    """Average sudden position shift caused by one measurement.

    Built from the commutator form (1/2) sum_a (P_a [x, P_a] - [x, P_a] P_a),
    which stays meaningful on the ring because only commutators of x with
    cell-local operators enter.  Rejects projector sets whose members are
    not supported on a single unit cell.
    """
    if proj.cell_size is None:
        raise ValueError("projector set does not carry cell structure")
    for i, p in enumerate(proj.projectors):
        if _cell_support(p, proj.cell_size) is None:
            raise ValueError(f"projector {i} is not supported on a single unit cell")
    x = x_op.mat
    q = np.zeros((proj.dim, proj.dim), dtype=complex)
    for p in proj.projectors:
        c = x @ p - p @ x
        q += 0.5 * (p @ c - c @ p)
    return QOperator(q, hermitian=True)


def position_measurement_spec(tau: float = 1.0, scheme: str = POISSON) -> MeasurementSpec:
    """Measurement of the exact particle location (m along +z)."""
    return MeasurementSpec(kind=BLOCH, m=(0.0, 0.0, 1.0), tau=tau, scheme=scheme)


def bloch_observable(m: np.ndarray) -> np.ndarray:
    """The 2x2 cell observable m.sigma."""
    m = np.asarray(m, dtype=float)
    return sum(m[i] * PAULI[i] for i in range(3))


__all__ = [
    "BLOCH",
    "THREE_SITE_PHASE",
    "POISSON",
    "FLOQUET",
    "MeasurementSpec",
    "ProjectorSet",
    "cell_unitary",
    "three_site_cell_states",
    "build_projectors",
    "kraus_map",
    "charge_displacement_operator",
    "position_measurement_spec",
    "bloch_observable",
]

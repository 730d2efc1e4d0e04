"""Tight-binding chains with two- and three-site unit cells.

Builds the real-space Hamiltonians on a ring (periodic boundary
conditions), the position operator, and the discrete symmetry
representations (inversion, time reversal, translation) used by the
classification and current machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import QOperator

TWO_SITE = "two_site"
THREE_SITE = "three_site"


@dataclass(frozen=True)
class LatticeSpec:
    """Chain geometry and hopping/staggering parameters.

    ``cells`` is the number of unit cells; the Hilbert dimension is
    ``2*cells`` (two-site) or ``3*cells`` (three-site).  Site layout per
    cell: offset 0 carries +V/2, the last offset carries -V/2.
    """

    model: str
    cells: int
    t1: float
    t2: float
    t3: float | None = None
    V: float = 0.0

    def __post_init__(self) -> None:
        if self.model not in (TWO_SITE, THREE_SITE):
            raise ValueError(f"unknown lattice model {self.model!r}")
        if self.cells < 2:
            raise ValueError("cells must be >= 2; the periodic wrap bond would double-count")
        if self.model == THREE_SITE and self.t3 is None:
            raise ValueError("three-site model requires t3")

    @property
    def cell_size(self) -> int:
        return 2 if self.model == TWO_SITE else 3

    @property
    def dim(self) -> int:
        return self.cell_size * self.cells


@dataclass(frozen=True)
class SpectralData:
    """Eigendecomposition of a Hermitian operator.

    ``energies`` ascending, ``states`` unitary with eigenvectors in
    columns, ``norm`` the spectral norm max|E|.
    """

    energies: np.ndarray
    states: np.ndarray
    norm: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "energies", np.asarray(self.energies, dtype=float))
        object.__setattr__(self, "states", np.asarray(self.states, dtype=complex))
        if np.any(np.diff(self.energies) < 0):
            raise ValueError("energies must be sorted nondecreasing")

    @property
    def dim(self) -> int:
        return self.energies.size


def build_hamiltonian(spec: LatticeSpec) -> QOperator:
    """Single-particle hopping Hamiltonian on the periodic chain.

    Nearest-neighbor hoppings -t1, -t2 (and -t3 for the three-site cell)
    alternate along the ring; on-site energies are +V/2 on the first and
    -V/2 on the last site of each cell.
    """
    d = spec.dim
    h = np.zeros((d, d), dtype=complex)
    s = spec.cell_size
    for n in range(spec.cells):
        base = s * n
        if spec.model == TWO_SITE:
            a, b = base, base + 1
            h[a, b] += -spec.t1
            h[b, a] += -spec.t1
            c = (base + 2) % d
            h[b, c] += -spec.t2
            h[c, b] += -spec.t2
            h[a, a] += spec.V / 2
            h[b, b] += -spec.V / 2
        else:
            a, b, c = base, base + 1, base + 2
            e = (base + 3) % d
            h[a, b] += -spec.t1
            h[b, a] += -spec.t1
            h[b, c] += -spec.t2
            h[c, b] += -spec.t2
            h[c, e] += -spec.t3
            h[e, c] += -spec.t3
            h[a, a] += spec.V / 2
            h[c, c] += -spec.V / 2
    return QOperator(h, hermitian=True)


def analytic_spectrum(spec: LatticeSpec, k: float, band: int) -> float:
    """Closed-form band energy of the two-site chain at wavevector k.

    Only ``k = n*pi/cells`` for integer n lies on the ring's reciprocal
    grid; other values are rejected.  ``band`` is +1 or -1.
    """
    if spec.model != TWO_SITE:
        raise ValueError("closed-form spectrum is only available for the two-site model")
    if band not in (1, -1):
        raise ValueError("band must be +1 or -1")
    n = k * spec.cells / np.pi
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"k={k} is not on the reciprocal grid n*pi/{spec.cells}")
    rad = spec.t1**2 + spec.t2**2 + 2 * spec.t1 * spec.t2 * np.cos(2 * k) + spec.V**2 / 4
    return float(band * np.sqrt(rad))


def allowed_wavevectors(spec: LatticeSpec) -> np.ndarray:
    return np.pi * np.arange(spec.cells) / spec.cells


def position_operator(spec: LatticeSpec) -> QOperator:
    """Diagonal position with integer site coordinates 0..dim-1."""
    return QOperator(np.diag(np.arange(spec.dim, dtype=float)).astype(complex), hermitian=True)


def site_projector(spec: LatticeSpec, site: int) -> QOperator:
    if not 0 <= site < spec.dim:
        raise ValueError(f"site {site} out of range for dim {spec.dim}")
    p = np.zeros((spec.dim, spec.dim), dtype=complex)
    p[site, site] = 1.0
    return QOperator(p, hermitian=True)


def eigendecompose(op: QOperator) -> SpectralData:
    if not op.hermitian:
        raise ValueError("eigendecompose requires the hermitian flag")
    energies, states = np.linalg.eigh(op.mat)
    return SpectralData(energies=energies, states=states, norm=float(np.abs(energies).max()))


def _permutation_matrix(perm: np.ndarray) -> np.ndarray:
    d = perm.size
    p = np.zeros((d, d), dtype=complex)
    p[perm, np.arange(d)] = 1.0
    return p


def inversion_operator(spec: LatticeSpec) -> QOperator:
    """Spatial inversion as a site permutation.

    The center sits on the middle of a t1 bond (two-site model) or on
    the central site of a cell (three-site model, which requires
    t1 == t2 for a center to exist).  With this choice conjugation maps
    V -> -V and leaves the V=0 Hamiltonian invariant.
    """
    d = spec.dim
    if spec.model == TWO_SITE:
        perm = (1 - np.arange(d)) % d
    else:
        if abs(spec.t1 - spec.t2) > 1e-12:
            raise ValueError("three-site chain with t1 != t2 has no inversion center")
        perm = (2 - np.arange(d)) % d
    return QOperator(_permutation_matrix(perm), hermitian=True)


def translation_operator(spec: LatticeSpec) -> QOperator:
    """Cyclic shift by one unit cell."""
    d = spec.dim
    perm = (np.arange(d) + spec.cell_size) % d
    return QOperator(_permutation_matrix(perm))


def time_reverse(op: QOperator) -> QOperator:
    """Complex conjugation in the position basis."""
    return QOperator(op.mat.conj(), hermitian=op.hermitian)

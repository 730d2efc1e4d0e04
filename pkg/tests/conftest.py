"""Shared fixtures: reference lattices, baths, and random-state helpers."""

from __future__ import annotations

import numpy as np
import pytest

from qmcurrents.lattice import LatticeSpec, build_hamiltonian, eigendecompose
from qmcurrents.lindblad import BathSpec, thermal_jump_operators
from qmcurrents.measurement import ProjectorSet
from qmcurrents.operators import DensityMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def chain3():
    """Workhorse two-site chain: t1=1, t2=0.5, V=3, three cells."""
    return LatticeSpec(model="two_site", cells=3, t1=1.0, t2=0.5, V=3.0)


@pytest.fixture
def chain3_sym():
    """Inversion-symmetric variant (V=0)."""
    return LatticeSpec(model="two_site", cells=3, t1=1.0, t2=0.5, V=0.0)


@pytest.fixture
def bath_weak():
    return BathSpec(gamma0=1e-3, temperature=0.1)


@pytest.fixture
def chain3_spectral(chain3):
    return eigendecompose(build_hamiltonian(chain3))


@pytest.fixture
def chain3_jumps(chain3_spectral, bath_weak):
    return thermal_jump_operators(chain3_spectral, bath_weak)


def random_density(rng: np.random.Generator, dim: int) -> DensityMatrix:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_cell_projectors(rng: np.random.Generator, lattice: LatticeSpec) -> ProjectorSet:
    """Random orthonormal outcome basis within every unit cell."""
    s, d = lattice.cell_size, lattice.dim
    projs, labels = [], []
    for n in range(lattice.cells):
        a = rng.normal(size=(s, s)) + 1j * rng.normal(size=(s, s))
        q, _ = np.linalg.qr(a)
        for outcome in range(s):
            p = np.zeros((d, d), dtype=complex)
            block = np.outer(q[:, outcome], q[:, outcome].conj())
            p[s * n : s * n + s, s * n : s * n + s] = block
            projs.append(p)
            labels.append((n, outcome))
    return ProjectorSet(projectors=tuple(projs), dim=d, cell_size=s, labels=tuple(labels))

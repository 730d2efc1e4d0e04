"""Dense operator containers and small linear-algebra helpers.

Everything in this package works with dense complex matrices at desk
scale (Hilbert dimensions of order 10), so the containers below are thin
wrappers around numpy arrays that carry validation, not abstraction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-8
TRACE_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def _as_square_complex(mat: np.ndarray) -> np.ndarray:
    arr = np.array(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QOperator:
    """A dense operator on the lattice Hilbert space.

    The ``hermitian`` flag is a promise checked at construction time
    (max deviation from the conjugate transpose at most 1e-12).
    """

    mat: np.ndarray
    hermitian: bool = False

    def __post_init__(self) -> None:
        arr = _as_square_complex(self.mat)
        object.__setattr__(self, "mat", arr)
        if self.hermitian:
            dev = np.max(np.abs(arr - arr.conj().T))
            if dev > HERMITICITY_TOL:
                raise ValueError(f"hermitian flag set but deviation is {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace state."""

    mat: np.ndarray
    _eigs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        arr = _as_square_complex(self.mat)
        object.__setattr__(self, "mat", arr)
        dev = np.max(np.abs(arr - arr.conj().T))
        if dev > HERMITICITY_TOL:
            raise ValueError(f"density matrix not hermitian: deviation {dev:.3e}")
        tr = np.trace(arr).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} != 1")
        eigs = np.linalg.eigvalsh(arr)
        if eigs.min() < -PSD_TOL:
            raise ValueError(f"density matrix has eigenvalue {eigs.min():.3e} < -{PSD_TOL}")
        object.__setattr__(self, "_eigs", eigs)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigs

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "DensityMatrix":
        """Hermitize and trace-normalize ``mat`` (cleanup for solver output)."""
        arr = np.asarray(mat, dtype=complex)
        arr = (arr + arr.conj().T) / 2
        tr = np.trace(arr).real
        if abs(tr) < 1e-14:
            raise ValueError("cannot normalize matrix with (near) zero trace")
        return cls(arr / tr)


def expectation(op: QOperator | np.ndarray, rho: DensityMatrix | np.ndarray) -> float:
    """Real part of tr(rho O); the operators of interest are Hermitian."""
    o = op.mat if isinstance(op, QOperator) else op
    r = rho.mat if isinstance(rho, DensityMatrix) else rho
    return float(np.trace(r @ o).real)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped to [0, 1]."""
    w, v = np.linalg.eigh(rho.mat)
    w = np.clip(w, 0.0, None)
    sqrt_rho = (v * np.sqrt(w)) @ v.conj().T
    inner = sqrt_rho @ sigma.mat @ sqrt_rho
    s = np.linalg.eigvalsh(inner)
    s = np.clip(s, 0.0, None)
    val = float(np.sqrt(s).sum() ** 2)
    return min(val, 1.0)

"""Parity classification under inversion, time reversal, and their product.

Inversion acts on the chain as the site permutation with center on a t1
bond; within a two-site cell it conjugates the Bloch observable by
sigma_x.  Time reversal is complex conjugation in the position basis,
which flips the sign of the sigma_y component.  An observable is an
eigenoperator of a symmetry S when S A S^{-1} = +A (even) or -A (odd);
everything in between has no definite parity, and that third state is
what the selection rules below key on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .lattice import LatticeSpec, inversion_operator
from .operators import QOperator

PARITY_TOL = 1e-10


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"
    NONE = "none"


@dataclass(frozen=True)
class SymmetryRep:
    """Unitary (or antiunitary) symmetry action on operators.

    Antiunitary representations act as O -> U conj(O) U^dag; the purely
    unitary ones as O -> U O U^dag.
    """

    unitary: np.ndarray
    antiunitary: bool = False

    def apply(self, op: np.ndarray) -> np.ndarray:
        o = op.conj() if self.antiunitary else op
        return self.unitary @ o @ self.unitary.conj().T


def inversion_rep(spec: LatticeSpec) -> SymmetryRep:
    return SymmetryRep(unitary=inversion_operator(spec).mat, antiunitary=False)


def time_reversal_rep(dim: int) -> SymmetryRep:
    return SymmetryRep(unitary=np.eye(dim, dtype=complex), antiunitary=True)


def inversion_time_rep(spec: LatticeSpec) -> SymmetryRep:
    return SymmetryRep(unitary=inversion_operator(spec).mat, antiunitary=True)


@dataclass(frozen=True)
class ParityReport:
    """Parities of the measured observable plus the Hamiltonian's inversion status.

    ``position_measurement`` marks the one observable family whose
    charge-displacement operator vanishes identically (measurement of
    the exact particle location).
    """

    under_I: Parity
    under_T: Parity
    under_IT: Parity
    H_inversion_symmetric: bool
    position_measurement: bool = False

    def __post_init__(self) -> None:
        if self.under_I is not Parity.NONE and self.under_T is not Parity.NONE:
            if self.under_IT is Parity.NONE:
                raise ValueError("I and T parities imply an IT parity (group closure)")
            want = Parity.EVEN if (self.under_I == self.under_T) else Parity.ODD
            if self.under_IT is not want:
                raise ValueError("IT parity inconsistent with the product of I and T parities")


@dataclass(frozen=True)
class SelectionRules:
    """Which current species are forced to vanish after one measurement
    of the classified observable starting from the Gibbs state."""

    JH_at_0plus_zero: bool
    JH_all_t_zero: bool
    JH_DC_zero: bool
    Q_zero: bool

    def __post_init__(self) -> None:
        if self.JH_all_t_zero and not (self.JH_at_0plus_zero and self.JH_DC_zero):
            raise ValueError("vanishing at all times implies vanishing at 0+ and in DC")


def _vector_parity(image: np.ndarray, m: np.ndarray) -> Parity:
    if np.max(np.abs(image - m)) <= PARITY_TOL:
        return Parity.EVEN
    if np.max(np.abs(image + m)) <= PARITY_TOL:
        return Parity.ODD
    return Parity.NONE


def classify_bloch(m: np.ndarray, h_inversion_symmetric: bool = True) -> ParityReport:
    """Parities of the cell observable m.sigma under I, T, and IT.

    Componentwise images: I negates (m_y, m_z), T negates m_y, IT
    negates m_z.
    """
    m = np.asarray(m, dtype=float)
    if abs(np.linalg.norm(m) - 1.0) > 1e-12:
        raise ValueError("m must be a unit vector")
    img_i = np.array([m[0], -m[1], -m[2]])
    img_t = np.array([m[0], -m[1], m[2]])
    img_it = np.array([m[0], m[1], -m[2]])
    is_position = bool(abs(abs(m[2]) - 1.0) <= PARITY_TOL)
    return ParityReport(
        under_I=_vector_parity(img_i, m),
        under_T=_vector_parity(img_t, m),
        under_IT=_vector_parity(img_it, m),
        H_inversion_symmetric=h_inversion_symmetric,
        position_measurement=is_position,
    )


def classify_operator(op: QOperator, rep: SymmetryRep) -> Parity:
    """Even/odd/none classification of S O S^{-1} against +-O."""
    if rep.unitary.shape[0] != op.dim:
        raise ValueError("symmetry representation dimension mismatch")
    image = rep.apply(op.mat)
    if np.max(np.abs(image - op.mat)) <= PARITY_TOL:
        return Parity.EVEN
    if np.max(np.abs(image + op.mat)) <= PARITY_TOL:
        return Parity.ODD
    return Parity.NONE


def predict_selection_rules(report: ParityReport) -> SelectionRules:
    """Map observable/Hamiltonian parities to forced zeros.

    The rules assume a real (time-reversal even) Hamiltonian and a
    measurement performed once on the Gibbs state:

    * inversion symmetry of both H and A kills every current species at
      all times;
    * a T-eigenoperator observable kills the current at 0+ and its DC
      part (currents may still oscillate or decay);
    * the displacement expectation vanishes when inversion kills
      everything, when the observable is IT-symmetric without I or T
      parity on an inversion-symmetric chain, or identically for a
      position measurement.
    """
    a_i = report.under_I is not Parity.NONE
    a_t = report.under_T is not Parity.NONE
    a_it = report.under_IT is not Parity.NONE
    h_i = report.H_inversion_symmetric

    all_t = h_i and a_i
    at_0plus = all_t or a_t
    dc = all_t or a_t
    q = all_t or report.position_measurement or (h_i and a_it and not a_i and not a_t)
    return SelectionRules(
        JH_at_0plus_zero=at_0plus,
        JH_all_t_zero=all_t,
        JH_DC_zero=dc,
        Q_zero=q,
    )

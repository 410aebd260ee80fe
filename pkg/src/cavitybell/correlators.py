"""Two-atom correlation functions for the phase and Bloch-rotation read-outs.

Each correlation is available two ways: :func:`correlation_generic` takes the
operator expectation on the evolved state, :func:`correlation_closed_form`
uses the coefficients alpha and beta. The two must agree to 1e-10.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .evolution import InitialCase, Scenario, TrigCoefficients, build_psi2, psi2_branches
from .fock import SIGMA_X, SIGMA_Z, AtomOperator, BasisKet, StateVector, apply_atom_operator, expectation

AGREEMENT_TOL = 1e-10


class Scheme(enum.Enum):
    """Which classical-field parameter is the free Bell setting."""

    PHASE = "A"
    BLOCH = "B"

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        key = text.strip().lower()
        for scheme, aliases in _SCHEME_ALIASES.items():
            if key in aliases:
                return scheme
        raise ValueError(f"unknown scheme {text!r} (expected phase/A or bloch/B)")

    def settings(self, a1: float, a2: float) -> "PhaseScheme | BlochScheme":
        return PhaseScheme(a1, a2) if self is Scheme.PHASE else BlochScheme(a1, a2)

    def __str__(self) -> str:
        return self.value


_SCHEME_ALIASES = {Scheme.PHASE: {"a", "phase"}, Scheme.BLOCH: {"b", "bloch"}}


@dataclass(frozen=True)
class PhaseScheme:
    phi1: float
    phi2: float

    scheme = Scheme.PHASE

    def operators(self) -> tuple[AtomOperator, AtomOperator]:
        return phase_operator_L(self.phi1, 1), phase_operator_L(self.phi2, 2)


@dataclass(frozen=True)
class BlochScheme:
    theta1: float
    theta2: float

    scheme = Scheme.BLOCH

    def operators(self) -> tuple[AtomOperator, AtomOperator]:
        return bloch_operator_O(self.theta1, 1), bloch_operator_O(self.theta2, 2)


MeasurementScheme = PhaseScheme | BlochScheme


@dataclass(frozen=True)
class CorrelationCoefficients:
    alpha: float
    beta: float


def phase_unitary_U(phi: float, atom: int) -> AtomOperator:
    """pi/2 pulse of the classical field with phase ``phi``."""
    m = np.array([[1, -np.exp(1j * phi)], [np.exp(-1j * phi), 1]]) / math.sqrt(2)
    return AtomOperator(m, atom)


def phase_operator_L(phi: float, atom: int) -> AtomOperator:
    """U^dagger sigma_z U for the phase-``phi`` pulse, in closed form."""
    m = np.array([[0, -np.exp(1j * phi)], [-np.exp(-1j * phi), 0]])
    return AtomOperator(m, atom)


def bloch_operator_O(theta: float, atom: int) -> AtomOperator:
    """Spin projection cos(theta) sigma_z + sin(theta) sigma_x."""
    return AtomOperator(math.cos(theta) * SIGMA_Z + math.sin(theta) * SIGMA_X, atom)


def correlation_generic(sc: Scenario, m: MeasurementScheme) -> float:
    """Expectation of the two-atom read-out product on the post-cavity state."""
    return expectation(m.operators(), build_psi2(sc))


def rabi_factor(eta, m: int):
    """sin(eta sqrt(m)) cos(eta sqrt(m)); its modulus never exceeds 1/2."""
    x = np.asarray(eta) * math.sqrt(m)
    return np.sin(x) * np.cos(x)


def second_atom_factor(case: InitialCase, n: int, eta2):
    """The eta2-dependent sin*cos product that multiplies the first atom's factor in alpha."""
    t = TrigCoefficients(n, np.asarray(eta2, float))
    if case is InitialCase.I:
        if n == 0:
            return np.zeros_like(t.eta)
        return t.s(0) * t.c(-1)
    if case is InitialCase.II:
        return t.s(1) * t.c(2)
    return t.s(1) * t.c(0)


def alpha_from_angles(case: InitialCase, n: int, eta1, eta2):
    """alpha as a product of trigonometric coefficients; broadcasts over angle arrays."""
    case = InitialCase.parse(case) if isinstance(case, str) else case
    t1 = TrigCoefficients(n, np.asarray(eta1, float))
    t2 = TrigCoefficients(n, np.asarray(eta2, float))
    if case is InitialCase.I:
        if n == 0:
            return np.zeros(np.broadcast(t1.eta, t2.eta).shape)
        return t1.s(0) * t1.c(0) * t2.s(0) * t2.c(-1)
    if case is InitialCase.II:
        return t1.s(1) * t1.c(1) * t2.s(1) * t2.c(2)
    return -t1.s(1) * t1.c(1) * t2.s(1) * t2.c(0)


def beta_from_angles(case: InitialCase, n: int, eta1, eta2):
    """Half the sigma_z x sigma_z correlation: 1/2 sum_k z1 z2 |amplitude_k|^2."""
    case = InitialCase.parse(case) if isinstance(case, str) else case
    total = 0.0
    for k, a in psi2_branches(case, n, eta1, eta2).items():
        total = total + k.atom1.z * k.atom2.z * np.abs(a) ** 2
    return 0.5 * total


def alpha_coefficient(sc: Scenario) -> float:
    return float(alpha_from_angles(sc.case, sc.n, sc.eta1, sc.eta2))


def beta_coefficient(sc: Scenario) -> float:
    return float(beta_from_angles(sc.case, sc.n, sc.eta1, sc.eta2))


def coefficients(sc: Scenario) -> CorrelationCoefficients:
    return CorrelationCoefficients(alpha_coefficient(sc), beta_coefficient(sc))


def closed_form(coef: CorrelationCoefficients, m: MeasurementScheme) -> float:
    if isinstance(m, PhaseScheme):
        return 2 * coef.alpha * math.cos(m.phi2 - m.phi1)
    return (2 * coef.alpha * math.sin(m.theta1) * math.sin(m.theta2)
            + 2 * coef.beta * math.cos(m.theta1) * math.cos(m.theta2))


def correlation_closed_form(sc: Scenario, m: MeasurementScheme) -> float:
    return closed_form(coefficients(sc), m)


def _diagonal_expectation(ops, k: BasisKet) -> float:
    basis = StateVector.basis(k)
    image = apply_atom_operator(ops[0], apply_atom_operator(ops[1], basis))
    return image[k].real


def correlation_mixture(sc: Scenario, m: MeasurementScheme) -> float:
    """Correlation after dropping all coherence between the branches of the post-cavity state.

    Each branch contributes its own product expectation weighted by its
    probability. For the Bloch read-out this is 2 beta cos(theta1) cos(theta2);
    for the phase read-out every branch term vanishes.
    """
    ops = m.operators()
    return sum(abs(a) ** 2 * _diagonal_expectation(ops, k) for k, a in build_psi2(sc))

"""Sparse state vectors over the two-atom, one-mode product basis |a1, a2, n>.

Amplitudes live in a mapping keyed by :class:`BasisKet`. Atom levels use the
column convention |e> = (1, 0), |g> = (0, 1), so a 2x2 matrix ``m`` sends
level ``j`` to ``sum_i m[i, j] |i>``.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

PRUNE_TOL = 1e-15
STATE_TOL = 1e-12
HERMITIAN_TOL = 1e-12
IMAG_TOL = 1e-10


class NonHermitianError(ValueError):
    """Raised when an observable is not self-adjoint."""


class TruncationError(RuntimeError):
    """A ket exceeded the photon cutoff of its state (a programming defect)."""


class Level(enum.Enum):
    E = "e"
    G = "g"

    @property
    def index(self) -> int:
        return 0 if self is Level.E else 1

    @property
    def z(self) -> int:
        """Eigenvalue of sigma_z: +1 for |e>, -1 for |g>."""
        return 1 if self is Level.E else -1

    @classmethod
    def from_index(cls, i: int) -> "Level":
        return cls.E if i == 0 else cls.G

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class BasisKet:
    atom1: Level
    atom2: Level
    photons: int

    def __post_init__(self):
        if self.photons < 0:
            raise ValueError(f"negative photon number {self.photons}")

    def level(self, atom: int) -> Level:
        return self.atom1 if atom == 1 else self.atom2

    def with_level(self, atom: int, level: Level, photons: int | None = None) -> "BasisKet":
        photons = self.photons if photons is None else photons
        if atom == 1:
            return BasisKet(level, self.atom2, photons)
        return BasisKet(self.atom1, level, photons)

    @property
    def excitations(self) -> int:
        """Atoms in |e> plus photons; conserved by the resonant coupling."""
        return (self.atom1 is Level.E) + (self.atom2 is Level.E) + self.photons

    def __str__(self) -> str:
        return f"|{self.atom1},{self.atom2},{self.photons}>"


def ket(label: str) -> BasisKet:
    """Parse a compact label such as ``"eg3"`` into a basis ket."""
    return BasisKet(Level(label[0]), Level(label[1]), int(label[2:]))


def _check_atom(atom: int) -> None:
    if atom not in (1, 2):
        raise ValueError(f"atom index must be 1 or 2, got {atom!r}")


@dataclass(frozen=True)
class StateVector:
    """Immutable finite superposition of basis kets.

    ``n_max`` is an optional photon cutoff; building a state with a ket beyond
    it raises :class:`TruncationError`.
    """

    terms: Mapping[BasisKet, complex] = field(default_factory=dict)
    n_max: int | None = None

    def __post_init__(self):
        clean = {}
        for k, a in self.terms.items():
            a = complex(a)
            if not (cmath.isfinite(a)):
                raise ValueError(f"non-finite amplitude {a} on {k}")
            if abs(a) < PRUNE_TOL:
                continue
            if self.n_max is not None and k.photons > self.n_max:
                raise TruncationError(f"{k} exceeds photon cutoff {self.n_max}")
            clean[k] = a
        object.__setattr__(self, "terms", MappingProxyType(clean))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[BasisKet, complex]], n_max: int | None = None) -> "StateVector":
        """Sum possibly repeated (ket, amplitude) pairs."""
        acc: dict[BasisKet, complex] = {}
        for k, a in pairs:
            acc[k] = acc.get(k, 0j) + a
        return cls(acc, n_max)

    @classmethod
    def basis(cls, k: BasisKet, n_max: int | None = None) -> "StateVector":
        return cls({k: 1.0}, n_max)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def __getitem__(self, k: BasisKet) -> complex:
        return self.terms.get(k, 0j)

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector.from_pairs([*self, *other], self._cutoff(other))

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + (-1.0) * other

    def __mul__(self, c: complex) -> "StateVector":
        return StateVector({k: c * a for k, a in self}, self.n_max)

    __rmul__ = __mul__

    def _cutoff(self, other: "StateVector") -> int | None:
        if self.n_max is None or other.n_max is None:
            return self.n_max if other.n_max is None else other.n_max
        return max(self.n_max, other.n_max)

    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self.terms.values())

    def isclose(self, other: "StateVector", tol: float = STATE_TOL) -> bool:
        """Componentwise comparison of real and imaginary parts."""
        for k in set(self.terms) | set(other.terms):
            d = self[k] - other[k]
            if abs(d.real) > tol or abs(d.imag) > tol:
                return False
        return True

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({a:.6g}){k}" for k, a in sorted(self, key=_ket_order))


def _ket_order(item):
    k = item[0]
    return (k.atom1.index, k.atom2.index, k.photons)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if len(a) > len(b):
        return sum((a[k].conjugate() * v for k, v in b), 0j)
    return sum((u.conjugate() * b[k] for k, u in a), 0j)


@dataclass(frozen=True, eq=False)
class AtomOperator:
    """A 2x2 matrix acting on the level of one atom."""

    matrix: np.ndarray
    atom: int

    def __post_init__(self):
        _check_atom(self.atom)
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, rtol=0.0, atol=tol))

    def on(self, atom: int) -> "AtomOperator":
        return AtomOperator(self.matrix, atom)

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return apply_atom_operator(self, other)
        return NotImplemented


SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


def sigma_z(atom: int) -> AtomOperator:
    return AtomOperator(SIGMA_Z, atom)


def sigma_x(atom: int) -> AtomOperator:
    return AtomOperator(SIGMA_X, atom)


def apply_atom_operator(op: AtomOperator, s: StateVector) -> StateVector:
    m = op.matrix
    pairs = []
    for k, a in s:
        j = k.level(op.atom).index
        for i in (0, 1):
            if m[i, j] != 0:
                pairs.append((k.with_level(op.atom, Level.from_index(i)), m[i, j] * a))
    return StateVector.from_pairs(pairs, s.n_max)


def expectation(ops: tuple[AtomOperator, AtomOperator], s: StateVector) -> float:
    """Real expectation <s| A B |s> of a product of two single-atom observables."""
    first, second = ops
    for op in ops:
        if not op.is_hermitian():
            raise NonHermitianError(f"operator on atom {op.atom} is not self-adjoint:\n{op.matrix}")
    value = inner_product(s, apply_atom_operator(first, apply_atom_operator(second, s)))
    if abs(value.imag) >= IMAG_TOL:
        raise ArithmeticError(f"expectation has imaginary part {value.imag:.3g}")
    return value.real

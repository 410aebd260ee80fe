"""Resonant atom-cavity passes for two atoms crossing one Fock mode in turn.

Each pass maps, with Rabi angle ``eta`` and the photon number ``n`` read from
the ket being transformed::

    |e, n>  ->  cos(eta sqrt(n+1)) |e, n>  -  i sin(eta sqrt(n+1)) |g, n+1>
    |g, n>  ->  cos(eta sqrt(n))   |g, n>  -  i sin(eta sqrt(n))   |e, n-1>

The absorption branch is never generated for ``n = 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fock import BasisKet, Level, StateVector, _check_atom


class InitialCase(enum.Enum):
    I = "I"
    II = "II"
    III = "III"

    @property
    def levels(self) -> tuple[Level, Level]:
        return _CASE_LEVELS[self]

    @property
    def shift(self) -> int:
        """Offset m - n of the photon index entering the first atom's factor."""
        return 0 if self is InitialCase.I else 1

    @classmethod
    def parse(cls, text: str) -> "InitialCase":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ValueError(f"unknown initial case {text!r} (expected I, II or III)") from None

    def __str__(self) -> str:
        return self.value


_CASE_LEVELS = {
    InitialCase.I: (Level.G, Level.G),
    InitialCase.II: (Level.E, Level.E),
    InitialCase.III: (Level.E, Level.G),
}


@dataclass(frozen=True)
class Scenario:
    """Initial case, initial photon number and the two Rabi angles."""

    case: InitialCase
    n: int
    eta1: float
    eta2: float

    def __post_init__(self):
        if isinstance(self.case, str):
            object.__setattr__(self, "case", InitialCase.parse(self.case))
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 0:
            raise ValueError(f"photon number must be a non-negative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("eta1", "eta2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def equal(cls, case, n: int, eta: float) -> "Scenario":
        return cls(case, n, eta, eta)

    @property
    def n_max(self) -> int:
        return self.n + 2


@dataclass(frozen=True)
class TrigCoefficients:
    """c_j = cos(eta sqrt(n+j)) and s_j = sin(eta sqrt(n+j)) for one atom.

    ``eta`` may be an array; the coefficients then broadcast.
    """

    n: int
    eta: float | np.ndarray

    def _arg(self, j: int):
        if self.n + j < 0:
            raise ValueError(f"c_{j}/s_{j} undefined for n = {self.n}")
        return self.eta * math.sqrt(self.n + j)

    def c(self, j: int):
        return np.cos(self._arg(j))

    def s(self, j: int):
        return np.sin(self._arg(j))


def transition(k: BasisKet, atom: int, eta) -> list[tuple[BasisKet, object]]:
    """Image of one basis ket under a cavity pass of ``atom``.

    ``eta`` may be a float or an array; amplitudes follow its shape.
    """
    n = k.photons
    if k.level(atom) is Level.E:
        x = eta * math.sqrt(n + 1)
        return [(k, np.cos(x)), (k.with_level(atom, Level.G, n + 1), -1j * np.sin(x))]
    if n == 0:
        return [(k, np.cos(0.0 * eta))]
    x = eta * math.sqrt(n)
    return [(k, np.cos(x)), (k.with_level(atom, Level.E, n - 1), -1j * np.sin(x))]


def cavity_pass(s: StateVector, atom: int, eta: float) -> StateVector:
    _check_atom(atom)
    pairs = [(k2, a * complex(c)) for k, a in s for k2, c in transition(k, atom, float(eta))]
    return StateVector.from_pairs(pairs, s.n_max)


def build_psi0(sc: Scenario) -> StateVector:
    a1, a2 = sc.case.levels
    return StateVector.basis(BasisKet(a1, a2, sc.n), n_max=sc.n_max)


@lru_cache(maxsize=4096)
def build_psi1(sc: Scenario) -> StateVector:
    return cavity_pass(build_psi0(sc), 1, sc.eta1)


@lru_cache(maxsize=4096)
def build_psi2(sc: Scenario) -> StateVector:
    return cavity_pass(build_psi1(sc), 2, sc.eta2)


def psi2_branches(case: InitialCase, n: int, eta1, eta2) -> dict[BasisKet, np.ndarray]:
    """Amplitudes of every ket reachable after both passes, broadcast over angle arrays.

    Unlike :func:`build_psi2` nothing is pruned, so entries may be exactly zero.
    """
    case = InitialCase.parse(case) if isinstance(case, str) else case
    eta1, eta2 = np.broadcast_arrays(np.asarray(eta1, float), np.asarray(eta2, float))
    a1, a2 = case.levels
    state = {BasisKet(a1, a2, n): np.ones_like(eta1, dtype=complex)}
    for atom, eta in ((1, eta1), (2, eta2)):
        nxt: dict[BasisKet, np.ndarray] = {}
        for k, a in state.items():
            for k2, c in transition(k, atom, eta):
                nxt[k2] = nxt.get(k2, 0) + a * c
        state = nxt
    return state

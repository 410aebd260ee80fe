"""CHSH sums and their maximization over Rabi angles and read-out settings."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .correlators import (
    Scheme,
    alpha_from_angles,
    beta_from_angles,
    closed_form,
    coefficients,
    correlation_generic,
    rabi_factor,
    second_atom_factor,
)
from .evolution import InitialCase, Scenario

TSIRELSON = 2 * math.sqrt(2)
EQUAL_ETA_ALPHA_BOUND = 2 * math.sqrt(3) / 9
DEFAULT_ETA_RANGE = (0.0, 25.0)
DEFAULT_N_LIST = (0, 1, 2, 4)
FIG2_ETA1 = math.pi / (4 * math.sqrt(2))
TIE_TOL = 1e-9
# worst-case gap between a grid value and the peak it samples
GRID_SLACK_1D = 1e-4
GRID_SLACK_2D = 5e-3


class ChshSettings(NamedTuple):
    """Settings (a1, a1', a2, a2') of the two atoms' read-outs."""

    a1: float
    a1p: float
    a2: float
    a2p: float


PHASE_OPTIMAL_SETTINGS = ChshSettings(0.0, math.pi / 2, math.pi / 4, -math.pi / 4)


class RabiSubcase(enum.Enum):
    EQUAL = "i"
    UNEQUAL = "ii"

    @classmethod
    def parse(cls, text: str) -> "RabiSubcase":
        key = text.strip().lower()
        if key in ("i", "equal"):
            return cls.EQUAL
        if key in ("ii", "unequal"):
            return cls.UNEQUAL
        raise ValueError(f"unknown Rabi subcase {text!r} (expected equal/i or unequal/ii)")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class BellResult:
    case: InitialCase
    scheme: Scheme
    subcase: RabiSubcase
    n: int
    eta1: float
    eta2: float
    s_max: float
    settings: ChshSettings
    alpha: float
    beta: float

    @property
    def scenario(self) -> Scenario:
        return Scenario(self.case, self.n, self.eta1, self.eta2)


Correlation = Callable[[Scenario, object], float]


def bell_sum(sc: Scenario, scheme: Scheme, st: ChshSettings, correlation: Correlation = correlation_generic) -> float:
    """|E(a1,a2) + E(a1,a2') + E(a1',a2) - E(a1',a2')|."""
    E = lambda x, y: correlation(sc, scheme.settings(x, y))
    return abs(E(st.a1, st.a2) + E(st.a1, st.a2p) + E(st.a1p, st.a2) - E(st.a1p, st.a2p))


def smax_phase_analytic(alpha):
    """Largest CHSH sum for E = 2 alpha cos(phi2 - phi1), with settings reaching it."""
    return 4 * math.sqrt(2) * np.abs(alpha), PHASE_OPTIMAL_SETTINGS


def smax_bloch_restricted(alpha, beta):
    """Best CHSH sum with theta1 = 0, theta1' = pi/2, theta2' = -theta2.

    Returns the sum 4 hypot(alpha, beta) and the optimal theta2. Broadcasts.
    """
    return 4 * np.hypot(alpha, beta), np.arctan2(alpha, beta)


def bloch_restricted_settings(theta2: float) -> ChshSettings:
    return ChshSettings(0.0, math.pi / 2, float(theta2), -float(theta2))


def eta_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Points lo, lo + step, ... up to hi inclusive (within rounding)."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if not hi > lo:
        raise ValueError(f"empty eta range [{lo}, {hi}]")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def objective(case: InitialCase, scheme: Scheme, n: int, eta1, eta2):
    """Optimal CHSH sum at given Rabi angles (restricted settings for the Bloch read-out)."""
    alpha = alpha_from_angles(case, n, eta1, eta2)
    if scheme is Scheme.PHASE:
        return smax_phase_analytic(alpha)[0]
    return smax_bloch_restricted(alpha, beta_from_angles(case, n, eta1, eta2))[0]


def _pick(candidates: Sequence[tuple[float, float, float]]) -> tuple[float, float, float]:
    """Largest value; among values within TIE_TOL of it, the smallest (eta1, eta2)."""
    best = max(c[0] for c in candidates)
    return min((c for c in candidates if c[0] >= best - TIE_TOL), key=lambda c: (c[1], c[2]))


def _seed_indices(values: np.ndarray, order: np.ndarray, k: int, slack: float) -> np.ndarray:
    """Up to ``k`` top-valued entries plus up to ``k`` earliest entries within ``slack`` of the best.

    ``order`` ranks entries by position so near-ties on the grid still reach
    refinement and the smallest-eta tie-break can see them.
    """
    if len(values) == 0:
        return np.array([], dtype=int)
    top = np.argsort(-values, kind="stable")[:k]
    near = np.flatnonzero(values >= values.max() - slack)
    near = near[np.argsort(order[near], kind="stable")[:k]]
    return np.union1d(top, near)


def _local_maxima_1d(values: np.ndarray) -> np.ndarray:
    padded = np.concatenate(([-np.inf], values, [-np.inf]))
    return np.flatnonzero((values >= padded[:-2]) & (values >= padded[2:]))


def maximize_1d(f: Callable, lo: float, hi: float, step: float, tol: float = 1e-6, candidates: int = 8):
    """Grid scan then bounded scalar refinement of the best grid peaks.

    ``f`` must accept arrays. Returns ``(value, argmax)``.
    """
    x = eta_grid(lo, hi, step)
    y = np.asarray(f(x), float)
    peaks = _local_maxima_1d(y)
    peaks = peaks[_seed_indices(y[peaks], peaks, candidates, GRID_SLACK_1D)]
    found = []
    for i in peaks:
        a, b = max(lo, x[i] - step), min(hi, x[i] + step)
        found.append((float(y[i]), float(x[i]), 0.0))
        if b > a:
            r = optimize.minimize_scalar(lambda t: -float(f(t)), bounds=(a, b), method="bounded",
                                         options={"xatol": tol / 10})
            if -r.fun > y[i]:
                found.append((float(-r.fun), float(r.x), 0.0))
    value, arg, _ = _pick(found)
    return value, arg


def _local_maxima_2d(y: np.ndarray) -> np.ndarray:
    p = np.pad(y, 1, constant_values=-np.inf)
    core = p[1:-1, 1:-1]
    mask = np.ones_like(y, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                mask &= core >= p[1 + di:p.shape[0] - 1 + di, 1 + dj:p.shape[1] - 1 + dj]
    return np.flatnonzero(mask)


def maximize_2d(f: Callable, lo: float, hi: float, step: float, tol: float = 1e-6,
                candidates: int = 12, chunk: int = 200):
    """Full (eta1, eta2) grid scan then bounded Nelder-Mead refinement of the best cells."""
    x = eta_grid(lo, hi, step)
    vals, flat_idx = [], []
    for start in range(0, len(x), chunk):
        y = np.asarray(f(x[start:start + chunk, None], x[None, :]), float)
        peaks = _local_maxima_2d(y)
        peaks = peaks[_seed_indices(y.ravel()[peaks], peaks, 8 * candidates, GRID_SLACK_2D)]
        vals.append(y.ravel()[peaks])
        flat_idx.append(peaks + start * len(x))
    vals, flat_idx = np.concatenate(vals), np.concatenate(flat_idx)
    seeds = flat_idx[_seed_indices(vals, flat_idx, candidates, GRID_SLACK_2D)]
    found = []
    for cell in seeds:
        i, j = divmod(int(cell), len(x))
        value = float(f(x[i], x[j]))
        found.append((value, float(x[i]), float(x[j])))
        box = [(max(lo, x[i] - step), min(hi, x[i] + step)), (max(lo, x[j] - step), min(hi, x[j] + step))]
        r = optimize.minimize(lambda p: -float(f(p[0], p[1])), [x[i], x[j]], method="Nelder-Mead",
                              bounds=box, options={"xatol": tol / 10, "fatol": 1e-13})
        if -r.fun > value:
            found.append((float(-r.fun), float(r.x[0]), float(r.x[1])))
    value, a, b = _pick(found)
    return value, a, b


def result_at(case: InitialCase, scheme: Scheme, subcase: RabiSubcase, n: int, eta1: float, eta2: float) -> BellResult:
    """Assemble the optimal-settings result for fixed Rabi angles."""
    alpha = float(alpha_from_angles(case, n, eta1, eta2))
    beta = float(beta_from_angles(case, n, eta1, eta2))
    if scheme is Scheme.PHASE:
        s, st = smax_phase_analytic(alpha)
    else:
        s, theta2 = smax_bloch_restricted(alpha, beta)
        st = bloch_restricted_settings(theta2)
    return BellResult(case, scheme, subcase, n, float(eta1), float(eta2), float(s), st, alpha, beta)


def optimize_case(case, scheme, subcase, n: int, eta_range: tuple[float, float] = DEFAULT_ETA_RANGE,
                  step: float = 1e-3, step2d: float = 1e-2, tol: float = 1e-6) -> BellResult:
    """Maximize the CHSH sum over Rabi angles for one (case, scheme, subcase, n).

    Equal angles and the phase read-out with unequal angles reduce to 1-D
    scans (alpha factorizes into a first-atom and a second-atom term). The
    Bloch read-out with unequal angles scans the full 2-D grid with ``step2d``.
    """
    case = InitialCase.parse(case) if isinstance(case, str) else case
    scheme = Scheme.parse(scheme) if isinstance(scheme, str) else scheme
    subcase = RabiSubcase.parse(subcase) if isinstance(subcase, str) else subcase
    lo, hi = eta_range
    if not hi > lo:
        raise ValueError(f"empty eta range [{lo}, {hi}]")

    if subcase is RabiSubcase.EQUAL:
        _, eta = maximize_1d(lambda e: objective(case, scheme, n, e, e), lo, hi, step, tol)
        return result_at(case, scheme, subcase, n, eta, eta)
    if scheme is Scheme.PHASE:
        m = n + case.shift
        _, eta1 = maximize_1d(lambda e: np.abs(rabi_factor(e, m)), lo, hi, step, tol)
        _, eta2 = maximize_1d(lambda e: np.abs(second_atom_factor(case, n, e)), lo, hi, step, tol)
        return result_at(case, scheme, subcase, n, eta1, eta2)
    _, eta1, eta2 = maximize_2d(lambda a, b: objective(case, scheme, n, a, b), lo, hi, step2d, tol)
    return result_at(case, scheme, subcase, n, eta1, eta2)


def maximize_settings(sc: Scenario, scheme: Scheme, starts: int = 24, seed: int = 0,
                      correlation: Correlation | None = None) -> tuple[float, ChshSettings]:
    """Unrestricted multi-start maximization of the CHSH sum over all four settings.

    Defaults to the closed-form correlation with this scenario's alpha and beta.
    """
    if correlation is None:
        coef = coefficients(sc)
        correlation = lambda _sc, m: closed_form(coef, m)
    rng = np.random.default_rng(seed)
    best = (-1.0, ChshSettings(0.0, 0.0, 0.0, 0.0))
    for _ in range(starts):
        x0 = rng.uniform(-math.pi, math.pi, 4)
        r = optimize.minimize(lambda p: -bell_sum(sc, scheme, ChshSettings(*p), correlation), x0,
                              method="BFGS", options={"gtol": 1e-10})
        if -r.fun > best[0]:
            best = (float(-r.fun), ChshSettings(*map(float, r.x)))
    return best


def table1(n_list: Sequence[int] = DEFAULT_N_LIST, eta_range: tuple[float, float] = DEFAULT_ETA_RANGE,
           step: float = 1e-3, step2d: float = 1e-2, cells=None) -> list[tuple[BellResult, list[BellResult]]]:
    """Best result over ``n_list`` for each (case, scheme, subcase) cell, with the per-n results.

    Cells run in the order I/II/III x A/B x i/ii unless ``cells`` is given.
    Ties over n go to the smallest n.
    """
    if not n_list:
        raise ValueError("n_list must not be empty")
    if cells is None:
        cells = [(c, s, r) for c in InitialCase for s in Scheme for r in RabiSubcase]
    out = []
    for case, scheme, subcase in cells:
        per_n = [optimize_case(case, scheme, subcase, n, eta_range, step, step2d) for n in sorted(set(n_list))]
        best = max(per_n, key=lambda r: r.s_max)
        best = next(r for r in per_n if r.s_max >= best.s_max - TIE_TOL)
        out.append((best, per_n))
    return out


def scan_curve_fig1(eta_range: tuple[float, float] = DEFAULT_ETA_RANGE, step: float = 1e-3) -> np.ndarray:
    """Rows (eta2, sin(eta2 sqrt 2) cos(eta2))."""
    eta = eta_grid(*eta_range, step)
    return np.column_stack([eta, np.sin(eta * math.sqrt(2)) * np.cos(eta)])


def scan_curve_fig2(eta1: float = FIG2_ETA1, n: int = 1, eta_range: tuple[float, float] = (0.0, 18.8),
                    step: float = 1e-3, case: InitialCase = InitialCase.III) -> np.ndarray:
    """Rows (eta2, restricted Bloch CHSH maximum) at fixed eta1."""
    eta2 = eta_grid(*eta_range, step)
    alpha = alpha_from_angles(case, n, eta1, eta2)
    beta = beta_from_angles(case, n, eta1, eta2)
    return np.column_stack([eta2, smax_bloch_restricted(alpha, beta)[0]])


def check_result(r: BellResult) -> float:
    """Discrepancy between the reported sum and the state-vector CHSH sum at the reported settings."""
    return abs(bell_sum(r.scenario, r.scheme, r.settings) - r.s_max)


import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavitybell.evolution import (
    InitialCase,
    Scenario,
    TrigCoefficients,
    build_psi0,
    build_psi1,
    build_psi2,
    cavity_pass,
    psi2_branches,
)
from cavitybell.fock import StateVector, ket

cases = st.sampled_from(list(InitialCase))
photons = st.integers(0, 6)
angles = st.floats(0, 25, allow_nan=False)


def psi2_written_out(sc: Scenario) -> StateVector:
    """Four-term post-cavity states typed in by hand, one line per initial case."""
    n = sc.n
    c = lambda eta, j: math.cos(eta * math.sqrt(n + j)) if n + j >= 0 else 0.0
    s = lambda eta, j: math.sin(eta * math.sqrt(n + j)) if n + j >= 0 else 0.0
    e1, e2 = sc.eta1, sc.eta2
    if sc.case is InitialCase.I:
        terms = [("gg", n, c(e1, 0) * c(e2, 0)), ("ge", n - 1, -1j * c(e1, 0) * s(e2, 0)),
                 ("eg", n - 1, -1j * s(e1, 0) * c(e2, -1)), ("ee", n - 2, -s(e1, 0) * s(e2, -1))]
    elif sc.case is InitialCase.II:
        terms = [("ee", n, c(e1, 1) * c(e2, 1)), ("eg", n + 1, -1j * c(e1, 1) * s(e2, 1)),
                 ("ge", n + 1, -1j * s(e1, 1) * c(e2, 2)), ("gg", n + 2, -s(e1, 1) * s(e2, 2))]
    else:
        terms = [("eg", n, c(e1, 1) * c(e2, 0)), ("ee", n - 1, -1j * c(e1, 1) * s(e2, 0)),
                 ("gg", n + 1, -1j * s(e1, 1) * c(e2, 1)), ("ge", n, -s(e1, 1) * s(e2, 1))]
    return StateVector({ket(f"{lv}{m}"): a for lv, m, a in terms if m >= 0})


def test_excited_branch_empty_cavity():
    eta = 0.9
    out = cavity_pass(StateVector.basis(ket("ee0")), 1, eta)
    assert out.isclose(StateVector({ket("ee0"): math.cos(eta), ket("ge1"): -1j * math.sin(eta)}))


def test_ground_branch_empty_cavity_is_fixed():
    assert cavity_pass(StateVector.basis(ket("gg0")), 2, 1.3).isclose(StateVector.basis(ket("gg0")))


def test_zero_angle_is_identity():
    s = StateVector({ket("eg2"): 0.6, ket("ge1"): 0.8j})
    assert cavity_pass(cavity_pass(s, 1, 0.0), 2, 0.0).isclose(s)


@pytest.mark.parametrize("case, n, label", [("I", 2, "gg2"), ("II", 0, "ee0"), ("III", 1, "eg1")])
def test_psi0(case, n, label):
    assert build_psi0(Scenario(case, n, 0.3, 0.4)).isclose(StateVector.basis(ket(label)))


def test_psi1_examples():
    assert build_psi1(Scenario("I", 0, 1.7, 0.0)).isclose(StateVector.basis(ket("gg0")))
    e1 = 0.4
    assert build_psi1(Scenario("III", 0, e1, 0.0)).isclose(
        StateVector({ket("eg0"): math.cos(e1), ket("gg1"): -1j * math.sin(e1)}))
    assert build_psi1(Scenario("II", 1, math.pi / (2 * math.sqrt(2)), 0.0)).isclose(
        StateVector({ket("ge2"): -1j}))


def test_psi2_case_III_empty_cavity():
    e1, e2 = 0.7, 2.1
    expected = StateVector({ket("eg0"): math.cos(e1), ket("gg1"): -1j * math.sin(e1) * math.cos(e2),
                            ket("ge0"): -math.sin(e1) * math.sin(e2)})
    assert build_psi2(Scenario("III", 0, e1, e2)).isclose(expected)


def test_psi2_case_I_empty_cavity():
    assert build_psi2(Scenario("I", 0, 3.0, 5.0)).isclose(StateVector.basis(ket("gg0")))


def test_psi2_case_II_numeric():
    eta = math.pi / math.sqrt(2)
    c1, s1 = math.cos(eta), math.sin(eta)
    c2, s2 = math.cos(math.pi), math.sin(math.pi)
    expected = StateVector({ket("ee0"): c1 * c1, ket("eg1"): -1j * c1 * s1,
                            ket("ge1"): -1j * s1 * c2, ket("gg2"): -s1 * s2})
    got = build_psi2(Scenario.equal("II", 0, eta))
    assert got.isclose(expected)
    assert abs(got[ket("ee0")] - 0.366872) < 1e-6


def test_trig_coefficients():
    t = TrigCoefficients(2, 0.5)
    assert t.c(-1) == pytest.approx(math.cos(0.5))
    assert t.s(2) == pytest.approx(math.sin(1.0))
    with pytest.raises(ValueError):
        TrigCoefficients(0, 0.5).c(-1)


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario("II", -1, 0.1, 0.1)
    with pytest.raises(ValueError):
        Scenario("II", 0, math.inf, 0.1)
    with pytest.raises(ValueError):
        Scenario("IV", 0, 0.1, 0.1)
    assert Scenario("ii", 1.0, 1, 2).case is InitialCase.II


@given(cases, photons, angles, angles)
def test_unitarity(case, n, e1, e2):
    sc = Scenario(case, n, e1, e2)
    assert abs(build_psi1(sc).norm_squared() - 1) < 1e-12
    assert abs(build_psi2(sc).norm_squared() - 1) < 1e-12


@given(cases, photons, angles, angles)
def test_sequential_passes_match_written_out_states(case, n, e1, e2):
    sc = Scenario(case, n, e1, e2)
    assert build_psi2(sc).isclose(psi2_written_out(sc), tol=1e-12)


@given(cases, photons, angles, angles)
def test_excitation_number_conserved(case, n, e1, e2):
    sc = Scenario(case, n, e1, e2)
    (k0, _), = build_psi0(sc)
    assert {k.excitations for k, _ in build_psi2(sc)} <= {k0.excitations}


@given(st.floats(0.01, math.pi / 2 - 0.01), angles)
def test_entanglement_onset_case_III(e1, e2):
    sc = Scenario("III", 0, e1, e2)
    assert len(build_psi1(sc)) == 2
    assert len(build_psi2(sc)) <= 3


def test_entanglement_onset_generic_three_terms():
    assert len(build_psi2(Scenario("III", 0, 0.6, 1.1))) == 3


@given(cases, photons, angles, angles)
def test_vector_branches_match_state_vector(case, n, e1, e2):
    sc = Scenario(case, n, e1, e2)
    branches = psi2_branches(case, n, e1, e2)
    dense = StateVector({k: complex(a) for k, a in branches.items()})
    assert dense.isclose(build_psi2(sc), tol=1e-14)


def test_vector_branches_broadcast():
    eta = np.linspace(0, 5, 11)
    branches = psi2_branches(InitialCase.II, 1, eta, 0.3)
    assert all(a.shape == eta.shape for a in branches.values())
    norms = sum(np.abs(a) ** 2 for a in branches.values())
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)

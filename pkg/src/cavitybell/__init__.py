"""Two Rydberg atoms crossing one cavity mode in turn: post-cavity states, CHSH
correlations for phase and Bloch-rotation read-outs, and Bell-sum maximization."""

from .bell import (
    BellResult,
    ChshSettings,
    RabiSubcase,
    bell_sum,
    maximize_settings,
    optimize_case,
    scan_curve_fig1,
    scan_curve_fig2,
    smax_bloch_restricted,
    smax_phase_analytic,
    table1,
)
from .correlators import (
    BlochScheme,
    CorrelationCoefficients,
    PhaseScheme,
    Scheme,
    alpha_coefficient,
    beta_coefficient,
    bloch_operator_O,
    correlation_closed_form,
    correlation_generic,
    correlation_mixture,
    phase_operator_L,
)
from .evolution import InitialCase, Scenario, build_psi0, build_psi1, build_psi2, cavity_pass
from .fock import AtomOperator, BasisKet, Level, StateVector, apply_atom_operator, expectation, inner_product

__version__ = "0.1.0"

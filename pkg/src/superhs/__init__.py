"""Supersymmetric Hunter-Saxton toolkit.

Exact symbolic verification of the system's algebraic structure (geodesic
derivation, bi-Hamiltonian formulation, supersymmetry, superspace form,
Lax-pair compatibility, recursion eigenrelations, conservation laws) on top of
an embedded graded differential-polynomial engine, plus a pseudospectral
integrator on the circle with Grassmann-valued fields.
"""
from .algebra import (
    EVEN,
    ODD,
    FieldSymbol,
    JetFactor,
    ParityError,
    SymExpr,
    lam_power,
    theta_factor,
)
from .calculus import (
    SuperfieldExpr,
    berezin,
    dt,
    dx,
    first_variation,
    substitute,
    superD,
    theta_expand,
)
from .density import (
    Density,
    canonical_density,
    densities_equal,
    equals_mod_dx,
    euler_x,
    euler_xt,
    is_total_x_derivative,
    variational_derivative,
)
from .grassmann import (
    GrassmannElement,
    gadd,
    gmul,
    gsub,
    parity_of,
    scale,
)
from .numerics import (
    BlowUpError,
    GridState,
    SolverConfig,
    Trajectory,
    conserved_quantities,
    evolve,
    initial_state,
    residual_check,
    rhs_once_integrated,
    step,
)
from .reporting import CheckResult, VerificationReport
from .sexpr import from_sexpr, to_sexpr
from .structures import (
    CHECKS,
    SUITE_NAMES,
    AlgebraElement,
    EvolutionSystem,
    LaxAnsatz,
    apply_J1,
    apply_J2,
    bilinear_B,
    conservation_check,
    geodesic_system,
    hamiltonian_densities,
    inner_product,
    lax_compatibility,
    lie_bracket,
    closing_ansatz,
    run_suite,
)

__version__ = "0.1.0"

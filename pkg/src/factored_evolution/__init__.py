"""Closed-form solver for factored linear evolution equations.

Solves

    (d/dt - A_1)(d/dt - A_2) ... (d/dt - A_n) u(t) = f(t),
    u^(k)(0) = x_k,

for mutually commuting generators ``A_j`` that may repeat.  Repeated
factors are grouped into ``(B_j, multiplicity S_j)`` pairs; the solution
coefficients come from a confluent operator-Vandermonde system, the
forced part from a Duhamel convolution with precomputed forcing weights,
and every result can be validated against an independent RK4 integration
of the equivalent first-order companion system.
"""

from .confluent import (
    BlockOperatorMatrix,
    ZCoefficients,
    build_confluent_matrix,
    scalar_confluent_matrix,
    solve_coefficients,
    solve_z_vector,
    two_operator_closed_form,
)
from .equation import (
    CompanionSystem,
    FactoredEquation,
    Forcing,
    build_companion,
    group_factors,
    initial_data_transform,
    oracle_solve,
)
from .errors import (
    DimensionMismatchError,
    DuplicateLabelError,
    FactoredEvolutionError,
    MixedBackendError,
    NonCommutingFactorsError,
    NonFiniteError,
    NotDoubleRootError,
    NotInvertibleError,
    QuadratureUnderResolvedError,
    SchemaError,
    SemigroupOverflowError,
    SingularMatrixError,
    SingularSystemError,
    UnknownProfileError,
    UnsupportedOperationError,
)
from .operators import (
    DenseMatrixOperator,
    Operator,
    SpectralDiagonalOperator,
    TranslationOperator,
    UniformGrid,
    commutation_defect,
    resolvent_solve,
)
from .pde_examples import (
    Example1Problem,
    Example2Problem,
    characteristic_roots,
    example1_closed_form,
    example1_residual,
    example2_closed_form_modal,
    example2_residual,
    solve_example1,
    solve_example2,
)
from .solver import (
    compare_with_oracle,
    default_quadrature_rule,
    initial_derivative_defect,
    lemma2_lhs,
    lemma2_rhs,
    solve_full,
    solve_homogeneous,
    solve_inhomogeneous_zero_ic,
)
from .statespace import QuadratureRule, expm_apply, lu_solve, rk4_integrate
from .trace import SolutionTrace

__version__ = "0.1.0"

__all__ = [
    "BlockOperatorMatrix",
    "CompanionSystem",
    "DenseMatrixOperator",
    "DimensionMismatchError",
    "DuplicateLabelError",
    "Example1Problem",
    "Example2Problem",
    "FactoredEquation",
    "FactoredEvolutionError",
    "Forcing",
    "MixedBackendError",
    "NonCommutingFactorsError",
    "NonFiniteError",
    "NotDoubleRootError",
    "NotInvertibleError",
    "Operator",
    "QuadratureRule",
    "QuadratureUnderResolvedError",
    "SchemaError",
    "SemigroupOverflowError",
    "SingularMatrixError",
    "SingularSystemError",
    "SolutionTrace",
    "SpectralDiagonalOperator",
    "TranslationOperator",
    "UniformGrid",
    "UnknownProfileError",
    "UnsupportedOperationError",
    "ZCoefficients",
    "build_companion",
    "build_confluent_matrix",
    "characteristic_roots",
    "commutation_defect",
    "compare_with_oracle",
    "default_quadrature_rule",
    "example1_closed_form",
    "example1_residual",
    "example2_closed_form_modal",
    "example2_residual",
    "expm_apply",
    "group_factors",
    "initial_data_transform",
    "initial_derivative_defect",
    "lemma2_lhs",
    "lemma2_rhs",
    "lu_solve",
    "oracle_solve",
    "resolvent_solve",
    "rk4_integrate",
    "scalar_confluent_matrix",
    "solve_coefficients",
    "solve_example1",
    "solve_example2",
    "solve_full",
    "solve_homogeneous",
    "solve_inhomogeneous_zero_ic",
    "solve_z_vector",
    "two_operator_closed_form",
]

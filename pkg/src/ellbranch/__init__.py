"""
Everything explicitly exposed here is part of the ``ellbranch`` public API.

``ellbranch`` models elliptic sets of symmetric matrices, the branches they
cut out of fully nonlinear operators, the structural conditions these
branches must satisfy, and a Perron solver for the Dirichlet problem.

.. warning::

    While ``ellbranch`` is not at version 1.0.0, it does not guarantee API
    stability.
"""

from ._branches import (
    BellmanMA,
    BranchSpec,
    KthEigenvalue,
    LinearTrace,
    MongeAmpere,
    OperatorSpec,
    PerturbedMA,
    PucciMinus,
    PucciPlus,
    TruncatedLinear,
    bellman_MA_estimate,
    branch_condition_check,
    evaluate,
    make_branch,
    monotonicity_check,
    natural_branch,
    natural_constraint,
    nondegeneracy_check,
    pucci_bellman_estimate,
    pucci_minus,
    pucci_plus,
    truncated_linear,
    truncation_bound_check,
    truncation_bounds,
)
from ._codec import (
    branch_from_dict,
    load_document,
    map_from_dict,
    operator_from_dict,
    problem_from_dict,
    set_from_dict,
)
from ._conditions import (
    caba2_admissible,
    classical_falsify,
    classical_pair_operator,
    gntd_estimate,
    sum_duals_check,
    ucf_check,
)
from ._config import Config, RunConfig
from ._domains import (
    Annulus,
    Ball,
    Box,
    DomainSpec,
    Ellipsoid,
    domain_from_dict,
)
from ._ellset import (
    PSD,
    AllMatrices,
    BranchMap,
    ConstantMap,
    DualMap,
    DualPSD,
    DualSet,
    EllipticMapSpec,
    EllipticSetSpec,
    HalfSpaceLinear,
    Pk,
    SublevelBranch,
    Translate,
    TranslatedMap,
    Truncated,
    boundary_contains,
    cone_certificate,
    cone_contains,
    contains,
    dist_op,
    dual,
    dual_contains,
    enlarge_contains,
    extend_to_closure,
    hausdorff_estimate,
    identity_witness,
    interior_contains,
    proper_witness,
    uniform_identity_witness,
    uusc_check,
)
from ._exceptions import (
    AdmissibilityException,
    BaseEllbranchException,
    BracketException,
    ConditionFailedException,
    ConfigException,
    DimensionMismatchException,
    EmptyBranchException,
    InvalidInputException,
    InvalidParameterException,
    NonConvergenceException,
    PreconditionException,
    SamplerExhaustedException,
    SpectrumViolationException,
    StencilOutOfDomainException,
    UnsupportedOperationException,
)
from ._fields import (
    Affine,
    Constant,
    MatrixField,
    Norm,
    Quadratic,
    RadialTable,
    ScalarField,
    Sum,
    scalar_field_from_dict,
)
from ._reports import ConditionReport, Verdict
from ._sampling import SamplerSpec
from ._solver import (
    Barrier,
    CheckSettings,
    ConvergenceRow,
    DirichletProblem,
    PerronResult,
    SolveReport,
    Stencil,
    barrier,
    boundary_barriers,
    build_stencil,
    convergence_study,
    convexity_check,
    discrete_operator,
    make_scheme,
    perron_solve,
    preflight,
)
from ._symcore import (
    EigDecomp,
    SymMat,
    determinant,
    eigs,
    is_psd,
    lambda_k,
    loewner_geq,
    negative_part,
    opnorm,
    outer,
    positive_part,
)
from ._weaksol import (
    ComparisonViolation,
    ContactTriple,
    GridFunction,
    comparison_harness,
    hessian_dictionary,
    slodkowski_K,
    stencil_gradient,
    stencil_hessian,
    subaffine_check,
    sup_convolution,
    theta_subharmonic_test,
    viscosity_test,
)

# XXX: The order here is important, it declares the order in which the entries
#      are documented in the public docs.
__all__ = [
    # Matrices
    "SymMat",
    "EigDecomp",
    "eigs",
    "lambda_k",
    "opnorm",
    "outer",
    "is_psd",
    "loewner_geq",
    "positive_part",
    "negative_part",
    "determinant",
    # Elliptic sets
    "EllipticSetSpec",
    "PSD",
    "DualPSD",
    "Pk",
    "HalfSpaceLinear",
    "AllMatrices",
    "Translate",
    "Truncated",
    "SublevelBranch",
    "DualSet",
    "contains",
    "interior_contains",
    "dual_contains",
    "enlarge_contains",
    "boundary_contains",
    "dual",
    "dist_op",
    "identity_witness",
    "proper_witness",
    "hausdorff_estimate",
    "cone_certificate",
    "cone_contains",
    # Elliptic maps
    "EllipticMapSpec",
    "ConstantMap",
    "TranslatedMap",
    "BranchMap",
    "DualMap",
    "uusc_check",
    "extend_to_closure",
    "uniform_identity_witness",
    # Domains and fields
    "DomainSpec",
    "Ball",
    "Ellipsoid",
    "Box",
    "Annulus",
    "domain_from_dict",
    "ScalarField",
    "Constant",
    "Norm",
    "Affine",
    "Quadratic",
    "RadialTable",
    "Sum",
    "MatrixField",
    "scalar_field_from_dict",
    # Operators and branches
    "OperatorSpec",
    "MongeAmpere",
    "PerturbedMA",
    "BellmanMA",
    "KthEigenvalue",
    "PucciMinus",
    "PucciPlus",
    "LinearTrace",
    "TruncatedLinear",
    "BranchSpec",
    "evaluate",
    "pucci_minus",
    "pucci_plus",
    "make_branch",
    "natural_branch",
    "natural_constraint",
    "bellman_MA_estimate",
    "pucci_bellman_estimate",
    "truncated_linear",
    "truncation_bounds",
    # Structural checks
    "SamplerSpec",
    "Verdict",
    "ConditionReport",
    "monotonicity_check",
    "branch_condition_check",
    "nondegeneracy_check",
    "truncation_bound_check",
    "ucf_check",
    "gntd_estimate",
    "sum_duals_check",
    "caba2_admissible",
    "classical_pair_operator",
    "classical_falsify",
    # Weak solutions
    "GridFunction",
    "ContactTriple",
    "ComparisonViolation",
    "subaffine_check",
    "stencil_hessian",
    "stencil_gradient",
    "hessian_dictionary",
    "viscosity_test",
    "theta_subharmonic_test",
    "sup_convolution",
    "slodkowski_K",
    "comparison_harness",
    # Dirichlet problem
    "Stencil",
    "build_stencil",
    "make_scheme",
    "discrete_operator",
    "Barrier",
    "barrier",
    "boundary_barriers",
    "convexity_check",
    "CheckSettings",
    "DirichletProblem",
    "preflight",
    "SolveReport",
    "PerronResult",
    "perron_solve",
    "ConvergenceRow",
    "convergence_study",
    # Descriptors
    "set_from_dict",
    "operator_from_dict",
    "map_from_dict",
    "branch_from_dict",
    "problem_from_dict",
    "load_document",
    # Configuration and errors
    "Config",
    "RunConfig",
    "BaseEllbranchException",
    "InvalidInputException",
    "DimensionMismatchException",
    "InvalidParameterException",
    "AdmissibilityException",
    "EmptyBranchException",
    "SamplerExhaustedException",
    "BracketException",
    "StencilOutOfDomainException",
    "SpectrumViolationException",
    "UnsupportedOperationException",
    "PreconditionException",
    "ConfigException",
    "NonConvergenceException",
    "ConditionFailedException",
]

"""tlsekit: equality-constrained total least squares.

Solvers (QR-SVD, closed form, weighted relaxation, randomized Nystrom),
first-order perturbation operators, and normwise/mixed/componentwise
condition numbers with exact, compact, and upper-bound formulas, plus the
experiment harness and `tlse` CLI that reproduce the reference tables at
desk scale.
"""

from .bench import (
    ExperimentRow,
    GeneratorSpec,
    PerturbationSample,
    apply_sample,
    emit_table,
    gen_equilibratory,
    gen_householder_spectrum,
    gen_piecewise_poly,
    generate,
    load_problem,
    parse_table,
    perturb,
    run_experiment,
    save_problem,
    table1,
    table2,
    table3,
)
from .conditioning import (
    ConditionReport,
    KOperator,
    MixedComponentwise,
    TlsSensitivity,
    Weights,
    apply_k,
    build_k_operator,
    condition_report,
    kappa_mixed_componentwise_exact,
    kappa_mixed_componentwise_upper,
    kappa_normwise_compact,
    kappa_normwise_exact,
    kappa_normwise_upper,
    materialize_k,
    tls_specialization,
)
from .core import (
    ConstraintBasis,
    CoreSvd,
    StationarityReport,
    TlseProblem,
    TlseSolution,
    build_basis,
    check_genericity,
    fast_gram_inverse,
    solve_closed_form,
    solve_qr_svd,
    validate_stationarity,
)
from .errors import (
    IllPosedError,
    InputError,
    NonGenericError,
    NumericalError,
    RankError,
    ResourceError,
    TlseError,
    UndefinedConditionError,
)
from .wtls import (
    EpsBound,
    LimitRow,
    NwtlsConfig,
    WeightedEmbedding,
    check_eps_bound,
    embed,
    solve_nwtls,
    solve_wtls_direct,
    wtls_limit_diagnostics,
)

__version__ = "0.1.0"

__all__ = [
    "ConditionReport",
    "ConstraintBasis",
    "CoreSvd",
    "EpsBound",
    "ExperimentRow",
    "GeneratorSpec",
    "IllPosedError",
    "InputError",
    "KOperator",
    "LimitRow",
    "MixedComponentwise",
    "NonGenericError",
    "NumericalError",
    "NwtlsConfig",
    "PerturbationSample",
    "apply_sample",
    "RankError",
    "ResourceError",
    "StationarityReport",
    "TlsSensitivity",
    "TlseError",
    "TlseProblem",
    "TlseSolution",
    "UndefinedConditionError",
    "WeightedEmbedding",
    "Weights",
    "apply_k",
    "build_basis",
    "build_k_operator",
    "check_eps_bound",
    "check_genericity",
    "condition_report",
    "embed",
    "emit_table",
    "fast_gram_inverse",
    "gen_equilibratory",
    "gen_householder_spectrum",
    "gen_piecewise_poly",
    "generate",
    "kappa_mixed_componentwise_exact",
    "kappa_mixed_componentwise_upper",
    "kappa_normwise_compact",
    "kappa_normwise_exact",
    "kappa_normwise_upper",
    "load_problem",
    "materialize_k",
    "parse_table",
    "perturb",
    "run_experiment",
    "save_problem",
    "solve_closed_form",
    "solve_nwtls",
    "solve_qr_svd",
    "solve_wtls_direct",
    "table1",
    "table2",
    "table3",
    "tls_specialization",
    "validate_stationarity",
    "wtls_limit_diagnostics",
]

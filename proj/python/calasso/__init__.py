"""Communication-avoiding stochastic FISTA and proximal Newton LASSO solvers."""

from ._calasso import (
    CalassoError,
    Dataset,
    DimensionError,
    ParameterError,
    ParseError,
    Sampler,
    UndefinedReferenceError,
    estimate_lipschitz,
    full_gradient,
    kkt_residual,
    lambda_max,
    modeled_time,
    objective,
    partition_columns,
    relative_solution_error,
    run,
    soft_threshold,
    solve_reference,
    synthesize,
)

__all__ = [
    "CalassoError",
    "Dataset",
    "DimensionError",
    "ParameterError",
    "ParseError",
    "Sampler",
    "UndefinedReferenceError",
    "estimate_lipschitz",
    "full_gradient",
    "kkt_residual",
    "lambda_max",
    "modeled_time",
    "objective",
    "partition_columns",
    "relative_solution_error",
    "run",
    "soft_threshold",
    "solve_reference",
    "synthesize",
]

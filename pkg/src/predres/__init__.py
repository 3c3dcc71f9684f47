"""Prior-free posterior inference by predictive resampling.

Forward-simulates unobserved data from one-step-ahead predictive models
(the interval-uniform predictive on ordered samples, its copula-coupled
multivariate extensions, the Polya urn, and a closed-form normal baseline),
computes a statistic at a large horizon, and repeats to obtain posterior
draws.
"""

from .engine import (
    PosteriorDraws,
    RunConfig,
    StatisticSpec,
    compute_statistic,
    martingale_diagnostics,
    normal_analytic_variance,
    run_bivariate,
    run_iid,
    run_multivariate,
    run_normal_analytic,
    run_regression,
    summarize,
)
from .errors import (
    DegeneracyError,
    DomainError,
    InversionError,
    NumericalError,
    ParseError,
    PredresError,
    TieError,
)
from .rng import RngStream, next_dirichlet_uniform, next_standard_normal, next_uniform
from .transforms import TransformSpec, choose_transform, gaussian_scores

__version__ = "0.1.0"

__all__ = [
    "DegeneracyError",
    "DomainError",
    "InversionError",
    "NumericalError",
    "ParseError",
    "PosteriorDraws",
    "PredresError",
    "RngStream",
    "RunConfig",
    "StatisticSpec",
    "TieError",
    "TransformSpec",
    "choose_transform",
    "compute_statistic",
    "gaussian_scores",
    "martingale_diagnostics",
    "next_dirichlet_uniform",
    "next_standard_normal",
    "next_uniform",
    "normal_analytic_variance",
    "run_bivariate",
    "run_iid",
    "run_multivariate",
    "run_normal_analytic",
    "run_regression",
    "summarize",
]

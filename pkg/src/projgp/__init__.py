"""Gaussian-process regression with exact, sparse-variational, and
projected-likelihood training, plus Fisher-information diagnostics for
linear projections of the data."""

from ._linalg import FactorizationError, jittered_cholesky
from .kernels import (
    FAMILY_PARAMS,
    GramMatrix,
    KernelSpec,
    cross_gram,
    gram,
    gram_grad,
    lag_matrix,
    laplace,
    locper,
    rq,
    se,
)
from .gp import (
    Dataset,
    Predictive,
    nll_exact,
    nll_exact_grad,
    nll_exact_value_grad,
    predict,
    sample_prior,
)

__all__ = [
    "FAMILY_PARAMS",
    "FactorizationError",
    "GramMatrix",
    "KernelSpec",
    "Dataset",
    "Predictive",
    "cross_gram",
    "gram",
    "gram_grad",
    "jittered_cholesky",
    "lag_matrix",
    "laplace",
    "locper",
    "nll_exact",
    "nll_exact_grad",
    "nll_exact_value_grad",
    "predict",
    "rq",
    "sample_prior",
    "se",
]

__version__ = "0.1.0"

"""Variational sparse GP: inducing-point lower bound and its gradient.

The negative evidence lower bound is

    F = 0.5 [ y^T (Q + sn2 I)^-1 y + log|Q + sn2 I| + n log 2pi ]
        + tr(K - Q) / (2 sn2),          Q = Kfu Kuu^-1 Kuf,

computed through the m x m matrices A = Lu^-1 Kuf and
B = I + A A^T / sn2 (Woodbury and the determinant lemma), so one
evaluation costs O(n m^2) and never forms Q densely.

Gradients are assembled from the matrix adjoints of F with respect to
Kuu, Kuf, the prior diagonal, and sn2, then contracted against the
analytic kernel derivatives; inducing-location gradients contract the
same adjoints against d k/d(lag).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._linalg import jittered_cholesky, solve_chol, solve_lower
from .gp import LOG_2PI, Dataset, Predictive
from .kernels import (
    KernelSpec,
    _as_input_vector,
    kernel_grad_from_lags,
    kernel_lag_grad_from_lags,
    kernel_value_from_lags,
    lag_matrix,
)


@dataclass
class InducingSet:
    """Trainable inducing-input locations."""

    locations: np.ndarray

    def __post_init__(self):
        self.locations = _as_input_vector(self.locations)

    @property
    def m(self) -> int:
        return self.locations.size


def init_inducing(x, m: int, seed=None) -> InducingSet:
    """Initial inducing locations drawn from the inputs.

    With ``seed=None``: m equispaced quantiles (exactly sorted x when
    m = n).  With a seed: a sorted random subset of the inputs, the usual
    initialisation for training runs.
    """
    x = _as_input_vector(x)
    if not 1 <= m <= x.size:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={x.size}")
    if seed is None:
        return InducingSet(np.quantile(x, np.linspace(0.0, 1.0, m)))
    chosen = np.random.default_rng(seed).choice(x, size=m, replace=False)
    return InducingSet(np.sort(chosen))


def _factor(spec, inducing, x, y):
    """Shared factorizations for the bound and its gradient."""
    xbar = inducing.locations
    sn2 = spec.noise_variance
    Kuu = kernel_value_from_lags(spec, lag_matrix(xbar))
    Kuf = kernel_value_from_lags(spec, lag_matrix(xbar, x))
    Lu, _ = jittered_cholesky(Kuu)
    A = solve_lower(Lu, Kuf)
    AAt = A @ A.T
    B = np.eye(inducing.m) + AAt / sn2
    LB = sla.cholesky(B, lower=True, check_finite=False)
    Ay = A @ y
    return Lu, A, AAt, LB, Ay


def _value(spec, n, kff_sum, AAt, LB, Ay, yy):
    sn2 = spec.noise_variance
    c = solve_lower(LB, Ay)
    quad = (yy - c @ c / sn2) / sn2
    logdet = n * np.log(sn2) + 2.0 * float(np.sum(np.log(np.diag(LB))))
    trace_term = (kff_sum - float(np.trace(AAt))) / (2.0 * sn2)
    return 0.5 * (quad + logdet + n * LOG_2PI) + trace_term


def neg_elbo(spec: KernelSpec, inducing: InducingSet, data: Dataset) -> float:
    """Negative variational lower bound; never below the exact NLL."""
    sn2 = spec.noise_variance
    _, _, AAt, LB, Ay = _factor(spec, inducing, data.x, data.y)
    kff_sum = float(np.sum(kernel_value_from_lags(spec, np.zeros(data.n))))
    return _value(spec, data.n, kff_sum, AAt, LB, Ay, float(data.y @ data.y))


def neg_elbo_grad(
    spec: KernelSpec, inducing: InducingSet, data: Dataset
) -> np.ndarray:
    """Gradient over [kernel params, noise variance, inducing locations]."""
    return neg_elbo_value_grad(spec, inducing, data)[1]


def neg_elbo_value_grad(
    spec: KernelSpec, inducing: InducingSet, data: Dataset
) -> tuple[float, np.ndarray]:
    """Bound and full gradient in one set of factorizations."""
    x, y, n = data.x, data.y, data.n
    xbar = inducing.locations
    m = inducing.m
    sn2 = spec.noise_variance

    Lu, A, AAt, LB, Ay = _factor(spec, inducing, x, y)
    kff_sum = float(np.sum(kernel_value_from_lags(spec, np.zeros(n))))
    value = _value(spec, n, kff_sum, AAt, LB, Ay, float(y @ y))

    # adjoints of the bound w.r.t. Kuu, Kuf, prior diagonal, and sn2
    b = solve_chol(LB, Ay)
    p = (y - A.T @ b / sn2) / sn2  # (Q + sn2 I)^-1 y
    T1 = sla.solve_triangular(Lu, A, lower=True, trans="T", check_finite=False)
    BinvA = solve_chol(LB, A)
    T1_Sinv = (T1 - (T1 @ A.T) @ BinvA / sn2) / sn2
    T1p = T1 @ p
    F_C = T1_Sinv - np.outer(T1p, p) - T1 / sn2
    F_K = -0.5 * (T1_Sinv - np.outer(T1p, p)) @ T1.T + (0.5 / sn2) * (T1 @ T1.T)

    Binv = solve_chol(LB, np.eye(m))
    tr_Sinv = n / sn2 - float(np.sum(Binv * AAt)) / sn2**2
    trace_residual = kff_sum - float(np.trace(AAt))
    g_sn2 = 0.5 * (tr_Sinv - float(p @ p)) - trace_residual / (2.0 * sn2**2)

    uu_lags = lag_matrix(xbar)
    uf_lags = lag_matrix(xbar, x)
    grad = np.empty(spec.n_params + m)
    for j in range(len(spec.params)):
        dKuu = kernel_grad_from_lags(spec, uu_lags, j)
        dKuf = kernel_grad_from_lags(spec, uf_lags, j)
        dkff = float(kernel_grad_from_lags(spec, np.zeros(1), j)[0])
        grad[j] = (
            float(np.sum(F_K * dKuu))
            + float(np.sum(F_C * dKuf))
            + n * dkff / (2.0 * sn2)
        )
    grad[spec.n_params - 1] = g_sn2

    Guu = F_K * kernel_lag_grad_from_lags(spec, uu_lags)
    Guf = F_C * kernel_lag_grad_from_lags(spec, uf_lags)
    grad[spec.n_params :] = Guu.sum(axis=1) - Guu.sum(axis=0) + Guf.sum(axis=1)
    return value, grad


def predict_sparse(
    spec: KernelSpec, inducing: InducingSet, data: Dataset, x_star, full_cov: bool = False
) -> Predictive:
    """Predictive posterior of the optimal variational approximation.

    mean = sn2^-1 K_*u (Kuu + sn2^-1 Kuf Kfu)^-1 Kuf y
    cov  = K_** - K_*u Kuu^-1 K_u* + K_*u (Kuu + sn2^-1 Kuf Kfu)^-1 K_u*

    Reduces to the exact posterior when the inducing set equals the inputs.
    """
    x_star = _as_input_vector(x_star)
    sn2 = spec.noise_variance
    Lu, A, _, LB, Ay = _factor(spec, inducing, data.x, data.y)
    c = solve_lower(LB, Ay) / sn2
    Astar = solve_lower(Lu, kernel_value_from_lags(spec, lag_matrix(inducing.locations, x_star)))
    D = solve_lower(LB, Astar)
    mean = D.T @ c
    if full_cov:
        cov = kernel_value_from_lags(spec, lag_matrix(x_star)) - Astar.T @ Astar + D.T @ D
        cov = 0.5 * (cov + cov.T)
        var = np.maximum(np.diag(cov).copy(), 0.0)
        return Predictive(x_star, mean, var, cov)
    prior_diag = kernel_value_from_lags(spec, np.zeros(x_star.size))
    var = np.maximum(
        prior_diag
        - np.einsum("ij,ij->j", Astar, Astar)
        + np.einsum("ij,ij->j", D, D),
        0.0,
    )
    return Predictive(x_star, mean, var)

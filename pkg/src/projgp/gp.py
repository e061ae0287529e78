"""Exact Gaussian-process machinery.

Negative log marginal likelihood and its gradient, the predictive
posterior, and prior sampling, all with a zero prior mean.  Every solve
goes through a (jittered) Cholesky factorization; no matrix is ever
inverted explicitly except where the gradient needs the full inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._linalg import (
    inv_from_chol,
    jittered_cholesky,
    log_det_from_chol,
    solve_chol,
    solve_lower,
)
from .kernels import (
    KernelSpec,
    _as_input_vector,
    cross_gram,
    gram,
    kernel_grad_from_lags,
    kernel_value_from_lags,
    lag_matrix,
)

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class Dataset:
    """Paired 1-D inputs and outputs of equal length."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = _as_input_vector(self.x)
        self.y = np.asarray(self.y, dtype=float)
        if self.y.shape != self.x.shape:
            raise ValueError(
                f"x and y lengths differ: {self.x.shape} vs {self.y.shape}"
            )
        if not np.all(np.isfinite(self.y)):
            raise ValueError("y contains non-finite values")

    @property
    def n(self) -> int:
        return self.x.size


@dataclass
class Predictive:
    """Posterior mean and (co)variance at test inputs.

    ``cov`` is populated only when the full covariance was requested;
    ``var`` (the clamped diagonal) is always available.
    """

    x_star: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    cov: Optional[np.ndarray] = None

    def to_csv(self, path) -> None:
        """Write columns (x_star, mean, var) for plotting."""
        table = np.column_stack([self.x_star, self.mean, self.var])
        np.savetxt(path, table, delimiter=",", header="x_star,mean,var", comments="")


def _noisy_chol(spec: KernelSpec, lags: np.ndarray) -> tuple[np.ndarray, float]:
    """Factor K + sn2 I; returns (L, total diagonal shift incl. jitter)."""
    K = kernel_value_from_lags(spec, lags)
    K[np.diag_indices_from(K)] += spec.noise_variance
    L, jitter = jittered_cholesky(K)
    return L, spec.noise_variance + jitter


def nll_exact(spec: KernelSpec, data: Dataset) -> float:
    """Negative log marginal likelihood of the data under the GP prior.

    Computed as ``0.5 y^T (K + sn2 I)^-1 y + 0.5 log|K + sn2 I|
    + (n/2) log 2pi`` via Cholesky.
    """
    return nll_exact_from_lags(spec, lag_matrix(data.x), data.y)


def nll_exact_from_lags(spec: KernelSpec, lags: np.ndarray, y: np.ndarray) -> float:
    """As :func:`nll_exact` but reusing a precomputed lag matrix."""
    L, _ = _noisy_chol(spec, lags)
    alpha = solve_chol(L, y)
    n = y.size
    return 0.5 * float(y @ alpha) + 0.5 * log_det_from_chol(L) + 0.5 * n * LOG_2PI


def nll_exact_grad(spec: KernelSpec, data: Dataset) -> np.ndarray:
    """Gradient of :func:`nll_exact` w.r.t. all parameters (noise last).

    Uses d/dt = 0.5 tr(K^-1 dK) - 0.5 y^T K^-1 dK K^-1 y with the noisy K.
    """
    return nll_exact_value_grad_from_lags(spec, lag_matrix(data.x), data.y)[1]


def nll_exact_value_grad(spec: KernelSpec, data: Dataset) -> tuple[float, np.ndarray]:
    return nll_exact_value_grad_from_lags(spec, lag_matrix(data.x), data.y)


def nll_exact_value_grad_from_lags(
    spec: KernelSpec, lags: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray]:
    """Objective and gradient in one factorization (the training hot path)."""
    L, shift = _noisy_chol(spec, lags)
    alpha = solve_chol(L, y)
    n = y.size
    quad = float(y @ alpha)
    value = 0.5 * quad + 0.5 * log_det_from_chol(L) + 0.5 * n * LOG_2PI

    Kinv = inv_from_chol(L)
    tr_Kinv = float(np.trace(Kinv))
    alpha_sq = float(alpha @ alpha)
    grad = np.empty(spec.n_params)
    # every family has dK/d(variance) = K_signal / variance, and
    # K_signal = (K + shift I) - shift I, so this component is free
    grad[0] = 0.5 * ((n - shift * tr_Kinv) - (quad - shift * alpha_sq)) / spec.params[0]
    for j in range(1, len(spec.params)):
        dK = kernel_grad_from_lags(spec, lags, j)
        grad[j] = 0.5 * (float(np.sum(Kinv * dK)) - float(alpha @ (dK @ alpha)))
    # noise variance: dK is the identity
    grad[-1] = 0.5 * (tr_Kinv - alpha_sq)
    return value, grad


def predict(spec: KernelSpec, data: Dataset, x_star, full_cov: bool = False) -> Predictive:
    """Predictive posterior at ``x_star``.

    mean = K_*x (K + sn2 I)^-1 y
    cov  = K_** - K_*x (K + sn2 I)^-1 K_x*

    The returned variance diagonal is clamped at zero (tiny negatives are
    numerical noise from the subtraction).
    """
    x_star = _as_input_vector(x_star)
    L, _ = _noisy_chol(spec, lag_matrix(data.x))
    alpha = solve_chol(L, data.y)
    Ks = cross_gram(spec, x_star, data.x)
    mean = Ks @ alpha
    V = solve_lower(L, Ks.T)
    if full_cov:
        cov = kernel_value_from_lags(spec, lag_matrix(x_star)) - V.T @ V
        cov = 0.5 * (cov + cov.T)
        var = np.maximum(np.diag(cov).copy(), 0.0)
        return Predictive(x_star, mean, var, cov)
    prior_diag = kernel_value_from_lags(spec, np.zeros(x_star.size))
    var = np.maximum(prior_diag - np.einsum("ij,ij->j", V, V), 0.0)
    return Predictive(x_star, mean, var)


def sample_prior(spec: KernelSpec, x, seed) -> np.ndarray:
    """One draw of y = L xi, xi ~ N(0, I), from the noisy prior at ``x``.

    Deterministic for a given seed.
    """
    x = _as_input_vector(x)
    L, _ = _noisy_chol(spec, lag_matrix(x))
    xi = np.random.default_rng(seed).standard_normal(x.size)
    return L @ xi

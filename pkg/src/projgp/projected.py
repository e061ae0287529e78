"""Training objective built on linear projections of the observations.

The data vector y is compressed to z = Omega^T y, which is Gaussian with
covariance Omega^T (K + sn2 I) Omega, and the negative log likelihood of
z replaces the exact objective.  Cost per evaluation is O(k n^2) for the
projected covariance plus O(k^3) for its factorization, instead of the
O(n^3) of the exact likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import inv_from_chol, jittered_cholesky, log_det_from_chol, solve_chol
from .gp import LOG_2PI, Dataset
from .kernels import (
    KernelSpec,
    kernel_grad_from_lags,
    kernel_value_from_lags,
    lag_matrix,
)
from .projections import ProjectionMatrix


@dataclass
class ProjectedData:
    """The compressed observations z = Omega^T y with their projection."""

    z: np.ndarray
    omega_ref: ProjectionMatrix


def project(omega: ProjectionMatrix, y) -> ProjectedData:
    """Compress y to its k projection coefficients."""
    y = np.asarray(y, dtype=float)
    if y.shape != (omega.n,):
        raise ValueError(f"y has shape {y.shape}, expected ({omega.n},)")
    return ProjectedData(omega.omega.T @ y, omega)


def _projected_cov_chol(spec, omega, lags):
    """Cholesky factor of C = Omega^T (K + sn2 I) Omega."""
    K = kernel_value_from_lags(spec, lags)
    M = K @ omega.omega
    M += spec.noise_variance * omega.omega
    C = omega.omega.T @ M
    C = 0.5 * (C + C.T)
    L, _ = jittered_cholesky(C)
    return L


def nll_pl(spec: KernelSpec, omega: ProjectionMatrix, data: Dataset) -> float:
    """Negative log likelihood of the projected observations.

    0.5 z^T C^-1 z + 0.5 log|C| + (k/2) log 2pi with
    C = Omega^T (K + sn2 I) Omega.
    """
    if data.n != omega.n:
        raise ValueError(f"projection rows ({omega.n}) != data size ({data.n})")
    return nll_pl_from_lags(spec, omega, lag_matrix(data.x), data.y)


def nll_pl_from_lags(
    spec: KernelSpec, omega: ProjectionMatrix, lags: np.ndarray, y: np.ndarray
) -> float:
    """As :func:`nll_pl` but reusing a precomputed lag matrix."""
    L = _projected_cov_chol(spec, omega, lags)
    z = omega.omega.T @ y
    beta = solve_chol(L, z)
    return 0.5 * float(z @ beta) + 0.5 * log_det_from_chol(L) + 0.5 * omega.k * LOG_2PI


def nll_pl_grad(spec: KernelSpec, omega: ProjectionMatrix, data: Dataset) -> np.ndarray:
    """Gradient of :func:`nll_pl` w.r.t. all parameters (noise last)."""
    return nll_pl_value_grad_from_lags(spec, omega, lag_matrix(data.x), data.y)[1]


def nll_pl_value_grad(
    spec: KernelSpec, omega: ProjectionMatrix, data: Dataset
) -> tuple[float, np.ndarray]:
    return nll_pl_value_grad_from_lags(spec, omega, lag_matrix(data.x), data.y)


def nll_pl_value_grad_from_lags(
    spec: KernelSpec, omega: ProjectionMatrix, lags: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray]:
    """Objective and gradient in one pass; dC_j = Omega^T dK_j Omega."""
    W = omega.omega
    k = omega.k
    sn2 = spec.noise_variance
    K = kernel_value_from_lags(spec, lags)
    M = K @ W
    WtW = W.T @ W
    C = W.T @ M + sn2 * WtW
    C = 0.5 * (C + C.T)
    L, jitter = jittered_cholesky(C)
    shift = sn2 + jitter
    z = W.T @ y
    beta = solve_chol(L, z)
    quad = float(z @ beta)
    value = 0.5 * quad + 0.5 * log_det_from_chol(L) + 0.5 * k * LOG_2PI

    Cinv = inv_from_chol(L)
    tr_noise = float(np.sum(Cinv * WtW))
    quad_noise = float(beta @ (WtW @ beta))
    tr_jitter = float(np.trace(Cinv))
    quad_jitter = float(beta @ beta)
    grad = np.empty(spec.n_params)
    # dC/d(variance) = (C - sn2 WtW - jitter I) / variance for every family
    grad[0] = 0.5 * (
        (k - sn2 * tr_noise - jitter * tr_jitter)
        - (quad - sn2 * quad_noise - jitter * quad_jitter)
    ) / spec.params[0]
    for j in range(1, len(spec.params)):
        dC = W.T @ (kernel_grad_from_lags(spec, lags, j) @ W)
        grad[j] = 0.5 * (float(np.sum(Cinv * dC)) - float(beta @ (dC @ beta)))
    grad[-1] = 0.5 * (tr_noise - quad_noise)
    return value, grad

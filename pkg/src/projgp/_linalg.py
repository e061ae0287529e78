"""Dense linear-algebra helpers shared across the package."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

JITTER_START = 1e-8
JITTER_MAX = 1e-2


class FactorizationError(np.linalg.LinAlgError):
    """Cholesky factorization failed even after jitter escalation."""


def jittered_cholesky(mat: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``mat`` with escalating diagonal jitter.

    A clean factorization is attempted first.  On failure, jitter starting
    at ``1e-8 * mean(diag)`` is added to the diagonal and escalated tenfold
    up to ``1e-2 * mean(diag)`` before giving up.

    Returns
    -------
    (L, jitter) : lower-triangular factor and the jitter actually added
        (0.0 when none was needed).

    Raises
    ------
    FactorizationError
        If the matrix cannot be factorized at the maximum jitter.
    """
    scale = float(np.mean(np.diag(mat)))
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    jitter = 0.0
    while True:
        try:
            shifted = mat if jitter == 0.0 else mat + jitter * np.eye(mat.shape[0])
            return sla.cholesky(shifted, lower=True, check_finite=False), jitter
        except np.linalg.LinAlgError:
            if jitter == 0.0:
                jitter = JITTER_START * scale
            else:
                jitter *= 10.0
            if jitter > JITTER_MAX * scale * (1.0 + 1e-12):
                raise FactorizationError(
                    f"Cholesky failed for {mat.shape[0]}x{mat.shape[0]} matrix "
                    f"even with jitter {JITTER_MAX * scale:.3e}"
                ) from None


def solve_lower(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``L v = b`` for lower-triangular ``L``."""
    return sla.solve_triangular(L, b, lower=True, check_finite=False)


def solve_chol(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``L L^T v = b`` given the lower Cholesky factor ``L``."""
    return sla.cho_solve((L, True), b, check_finite=False)


def inv_from_chol(L: np.ndarray) -> np.ndarray:
    """Full inverse of ``L L^T`` from its lower Cholesky factor."""
    return sla.cho_solve((L, True), np.eye(L.shape[0]), check_finite=False)


def log_det_from_chol(L: np.ndarray) -> float:
    """log-determinant of ``L L^T``, as twice the sum of log diagonal."""
    return 2.0 * float(np.sum(np.log(np.diag(L))))

"""Constructors for the projection matrices used to compress the data.

Every constructor returns a validated :class:`ProjectionMatrix` whose
columns are unit-norm and linearly independent.  Construction is
deterministic given the inputs and seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import GramMatrix, _as_input_vector

KINDS = ("Sphere", "Repulsive", "Localised", "OneHot", "Eigen", "Identity", "Custom")

_UNIT_NORM_TOL = 1e-12
_RANK_RTOL = 1e-10


@dataclass
class ProjectionMatrix:
    """An n x k matrix of unit-norm, linearly independent columns."""

    omega: np.ndarray
    kind: str
    seed: Optional[int] = None

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if self.omega.ndim != 2:
            raise ValueError("omega must be a 2-D array")
        if self.kind not in KINDS:
            raise ValueError(f"unknown projection kind {self.kind!r}")
        n, k = self.omega.shape
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
        norms = np.linalg.norm(self.omega, axis=0)
        if np.any(np.abs(norms - 1.0) > _UNIT_NORM_TOL):
            raise ValueError("projection columns must have unit Euclidean norm")
        svals = np.linalg.svd(self.omega, compute_uv=False)
        if svals[-1] <= _RANK_RTOL * svals[0]:
            raise ValueError(
                f"projection columns are linearly dependent (rank < k={k})"
            )

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def k(self) -> int:
        return self.omega.shape[1]

    def save(self, path) -> None:
        """Binary dump of (kind, seed, columns); seed -1 stands for None."""
        np.savez(
            path,
            kind=np.array(self.kind),
            seed=np.int64(-1 if self.seed is None else self.seed),
            omega=self.omega,
        )

    @classmethod
    def load(cls, path) -> "ProjectionMatrix":
        with np.load(path) as payload:
            seed = int(payload["seed"])
            return cls(
                payload["omega"],
                str(payload["kind"].item()),
                None if seed == -1 else seed,
            )


def _normalize_columns(mat: np.ndarray) -> np.ndarray:
    return mat / np.linalg.norm(mat, axis=0, keepdims=True)


def sphere(n: int, k: int, seed) -> ProjectionMatrix:
    """Columns drawn i.i.d. uniformly on the unit sphere in R^n."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    draws = np.random.default_rng(seed).standard_normal((n, k))
    return ProjectionMatrix(_normalize_columns(draws), "Sphere", seed)


def frame_potential(omega: np.ndarray) -> float:
    """Sum of squared pairwise column inner products."""
    g = omega.T @ omega
    return 0.5 * float(np.sum(g * g) - np.sum(np.diag(g) ** 2))


def max_coherence(omega: np.ndarray) -> float:
    """Largest |w_i . w_j| over distinct column pairs (0.0 for k = 1)."""
    g = omega.T @ omega
    np.fill_diagonal(g, 0.0)
    return float(np.max(np.abs(g)))


def repulsive(n: int, k: int, seed, steps: int = 200, step_size: float = 0.1) -> ProjectionMatrix:
    """Sphere draws spread apart by minimising the frame potential.

    Projected gradient descent on the product of spheres, with per-step
    backtracking so the frame potential never increases.
    """
    start = sphere(n, k, seed)
    if k == 1:
        return ProjectionMatrix(start.omega, "Repulsive", seed)
    omega = start.omega.copy()
    fp = frame_potential(omega)
    for _ in range(steps):
        g = omega.T @ omega
        np.fill_diagonal(g, 0.0)
        grad = 2.0 * omega @ g
        grad -= omega * np.sum(grad * omega, axis=0)
        step = step_size
        accepted = False
        for _ in range(20):
            candidate = _normalize_columns(omega - step * grad)
            candidate_fp = frame_potential(candidate)
            if candidate_fp <= fp:
                omega, fp, accepted = candidate, candidate_fp, True
                break
            step *= 0.5
        if not accepted:
            break
    return ProjectionMatrix(omega, "Repulsive", seed)


def localised(x, k: int, width_factor: float = 1.0) -> ProjectionMatrix:
    """Normalised Gaussian bumps with centres equispaced over the input range.

    The bump width is ``width_factor`` times the centre spacing (the full
    range for k = 1), giving overlapping coverage of the observations.
    """
    x = _as_input_vector(x)
    n = x.size
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    lo, hi = float(np.min(x)), float(np.max(x))
    if k == 1:
        centres = np.array([(lo + hi) / 2.0])
        spacing = hi - lo
    else:
        if hi == lo:
            raise ValueError("all inputs equal: cannot place k > 1 distinct centres")
        centres = np.linspace(lo, hi, k)
        spacing = (hi - lo) / (k - 1)
    width = width_factor * spacing
    if width == 0.0:
        cols = np.ones((n, 1))
    else:
        cols = np.exp(-0.5 * ((x[:, None] - centres[None, :]) / width) ** 2)
    return ProjectionMatrix(_normalize_columns(cols), "Localised", None)


def one_hot(n: int, k: int, seed) -> ProjectionMatrix:
    """k distinct standard basis vectors, sampled without replacement."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    idx = np.random.default_rng(seed).choice(n, size=k, replace=False)
    omega = np.zeros((n, k))
    omega[idx, np.arange(k)] = 1.0
    return ProjectionMatrix(omega, "OneHot", seed)


def eigen(gram: GramMatrix, k: int, which: str = "Top") -> ProjectionMatrix:
    """k orthonormal eigenvectors of a Gram matrix.

    ``which="Top"`` returns the leading eigenvectors in descending
    eigenvalue order; ``which="Bottom"`` the trailing ones ascending.
    """
    if which not in ("Top", "Bottom"):
        raise ValueError(f"which must be 'Top' or 'Bottom', got {which!r}")
    values = gram.values
    n = values.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    _, vectors = np.linalg.eigh(0.5 * (values + values.T))
    if which == "Top":
        cols = vectors[:, ::-1][:, :k]
    else:
        cols = vectors[:, :k]
    return ProjectionMatrix(_normalize_columns(cols), "Eigen", None)


def identity(n: int) -> ProjectionMatrix:
    """The n x n identity as a trivial full-rank projection."""
    return ProjectionMatrix(np.eye(n), "Identity", None)


def custom(columns, seed=None) -> ProjectionMatrix:
    """Wrap user-supplied columns, enforcing the usual invariants."""
    return ProjectionMatrix(np.asarray(columns, dtype=float), "Custom", seed)

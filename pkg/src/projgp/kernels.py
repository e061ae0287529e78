"""Stationary covariance families, Gram matrices, and analytic derivatives.

Four families are supported, each with strictly positive hyperparameters
plus a separate observation-noise variance:

    SE       k(d) = v * exp(-d^2 / (2 l^2))
    Laplace  k(d) = v * exp(-|d| / l)
    RQ       k(d) = v * (1 + d^2 / (2 a l^2)) ** -a
    LocPer   k(d) = v * exp(-2 sin^2(pi d / p) / lp^2) * exp(-d^2 / (2 ld^2))

All evaluation routines work from the matrix of pairwise lags, so callers
that re-evaluate many hyperparameter settings on fixed inputs can build
the lag matrix once with :func:`lag_matrix` and use the ``*_from_lags``
variants directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

FAMILY_PARAMS = {
    "SE": ("variance", "lengthscale"),
    "Laplace": ("variance", "lengthscale"),
    "RQ": ("variance", "lengthscale", "shape"),
    "LocPer": ("variance", "period", "periodic_lengthscale", "decay_lengthscale"),
}

NOISE_PARAM = "noise_variance"


def _as_input_vector(x) -> np.ndarray:
    """Coerce inputs to a finite 1-D float array; (n, 1) arrays are squeezed."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D input vector, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("input vector is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("input vector contains non-finite values")
    return arr


@dataclass(frozen=True)
class KernelSpec:
    """A covariance family with its hyperparameters and noise variance.

    ``params`` may be given as an ordered sequence of values or as a
    mapping from canonical parameter names; it is stored as a tuple in
    the family's canonical order.
    """

    family: str
    params: tuple
    noise_variance: float

    def __post_init__(self):
        if self.family not in FAMILY_PARAMS:
            raise ValueError(f"unknown kernel family {self.family!r}")
        names = FAMILY_PARAMS[self.family]
        raw = self.params
        if isinstance(raw, Mapping):
            missing = set(names) - set(raw)
            extra = set(raw) - set(names)
            if missing or extra:
                raise ValueError(
                    f"{self.family} expects params {names}, got {sorted(raw)}"
                )
            values = tuple(float(raw[name]) for name in names)
        else:
            values = tuple(float(v) for v in raw)
            if len(values) != len(names):
                raise ValueError(
                    f"{self.family} expects {len(names)} params {names}, "
                    f"got {len(values)}"
                )
        object.__setattr__(self, "params", values)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        for name, value in zip(self.param_names, self.values()):
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"{self.family} parameter {name}={value} must be a positive real")

    @property
    def kernel_param_names(self) -> tuple:
        return FAMILY_PARAMS[self.family]

    @property
    def param_names(self) -> tuple:
        """Kernel parameter names plus the noise variance, in gradient order."""
        return FAMILY_PARAMS[self.family] + (NOISE_PARAM,)

    @property
    def n_params(self) -> int:
        return len(self.params) + 1

    def values(self) -> np.ndarray:
        """All differentiable parameters: kernel params then noise variance."""
        return np.array(self.params + (self.noise_variance,))

    def with_values(self, values: Sequence[float]) -> "KernelSpec":
        """New spec of the same family from a full parameter vector."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} values, got shape {values.shape}")
        return KernelSpec(self.family, tuple(values[:-1]), values[-1])

    def to_json(self) -> str:
        names = self.kernel_param_names
        return json.dumps(
            {
                "family": self.family,
                "params": {name: value for name, value in zip(names, self.params)},
                "noise_variance": self.noise_variance,
            }
        )

    @classmethod
    def from_json(cls, source) -> "KernelSpec":
        obj = json.loads(source) if isinstance(source, (str, bytes)) else source
        return cls(obj["family"], obj["params"], obj["noise_variance"])


def se(variance, lengthscale, noise_variance) -> KernelSpec:
    return KernelSpec("SE", (variance, lengthscale), noise_variance)


def laplace(variance, lengthscale, noise_variance) -> KernelSpec:
    return KernelSpec("Laplace", (variance, lengthscale), noise_variance)


def rq(variance, lengthscale, shape, noise_variance) -> KernelSpec:
    return KernelSpec("RQ", (variance, lengthscale, shape), noise_variance)


def locper(variance, period, periodic_lengthscale, decay_lengthscale, noise_variance) -> KernelSpec:
    return KernelSpec(
        "LocPer", (variance, period, periodic_lengthscale, decay_lengthscale), noise_variance
    )


@dataclass
class GramMatrix:
    """An n x n covariance matrix, optionally with noise on the diagonal."""

    values: np.ndarray
    includes_noise: bool

    @property
    def n(self) -> int:
        return self.values.shape[0]


# family evaluation; `lags` is the signed matrix of pairwise differences


def _se_value(lags, v, ell):
    return v * np.exp(-0.5 * (lags / ell) ** 2)


def _se_grads(lags, v, ell):
    k = _se_value(lags, v, ell)
    return (k / v, k * lags**2 / ell**3)


def _se_lag_grad(lags, v, ell):
    return -_se_value(lags, v, ell) * lags / ell**2


def _laplace_value(lags, v, ell):
    return v * np.exp(-np.abs(lags) / ell)


def _laplace_grads(lags, v, ell):
    k = _laplace_value(lags, v, ell)
    return (k / v, k * np.abs(lags) / ell**2)


def _laplace_lag_grad(lags, v, ell):
    # subgradient 0 at zero lag
    return -_laplace_value(lags, v, ell) * np.sign(lags) / ell


def _rq_value(lags, v, ell, a):
    u = 1.0 + lags**2 / (2.0 * a * ell**2)
    return v * u ** (-a)


def _rq_grads(lags, v, ell, a):
    r2 = lags**2
    u = 1.0 + r2 / (2.0 * a * ell**2)
    k = v * u ** (-a)
    dv = k / v
    dl = k * r2 / (ell**3 * u)
    da = k * (-np.log1p(r2 / (2.0 * a * ell**2)) + r2 / (2.0 * a * ell**2 * u))
    return (dv, dl, da)


def _rq_lag_grad(lags, v, ell, a):
    u = 1.0 + lags**2 / (2.0 * a * ell**2)
    return -v * u ** (-a) * lags / (ell**2 * u)


def _locper_value(lags, v, p, lp, ld):
    s2 = np.sin(np.pi * np.abs(lags) / p) ** 2
    return v * np.exp(-2.0 * s2 / lp**2) * np.exp(-0.5 * (lags / ld) ** 2)


def _locper_grads(lags, v, p, lp, ld):
    tau = np.abs(lags)
    s2 = np.sin(np.pi * tau / p) ** 2
    k = v * np.exp(-2.0 * s2 / lp**2) * np.exp(-0.5 * (tau / ld) ** 2)
    dv = k / v
    dp = k * (2.0 * np.pi * tau / (p**2 * lp**2)) * np.sin(2.0 * np.pi * tau / p)
    dlp = k * 4.0 * s2 / lp**3
    dld = k * tau**2 / ld**3
    return (dv, dp, dlp, dld)


def _locper_lag_grad(lags, v, p, lp, ld):
    k = _locper_value(lags, v, p, lp, ld)
    return k * (-(2.0 * np.pi / (p * lp**2)) * np.sin(2.0 * np.pi * lags / p) - lags / ld**2)


_VALUE = {
    "SE": _se_value,
    "Laplace": _laplace_value,
    "RQ": _rq_value,
    "LocPer": _locper_value,
}
_GRADS = {
    "SE": _se_grads,
    "Laplace": _laplace_grads,
    "RQ": _rq_grads,
    "LocPer": _locper_grads,
}
_LAG_GRAD = {
    "SE": _se_lag_grad,
    "Laplace": _laplace_lag_grad,
    "RQ": _rq_lag_grad,
    "LocPer": _locper_lag_grad,
}


def lag_matrix(a, b=None) -> np.ndarray:
    """Signed pairwise lags ``a_i - b_j`` (``b`` defaults to ``a``)."""
    a = _as_input_vector(a)
    b = a if b is None else _as_input_vector(b)
    return a[:, None] - b[None, :]


def kernel_value_from_lags(spec: KernelSpec, lags: np.ndarray) -> np.ndarray:
    """Covariance evaluated elementwise on a matrix of lags (no noise)."""
    return _VALUE[spec.family](lags, *spec.params)


def kernel_grad_from_lags(spec: KernelSpec, lags: np.ndarray, param_index: int) -> np.ndarray:
    """Elementwise derivative of the covariance w.r.t. one kernel parameter.

    ``param_index`` follows :meth:`KernelSpec.param_names`; the noise index
    is handled by the Gram-level wrappers, not here.
    """
    if not 0 <= param_index < len(spec.params):
        raise ValueError(f"kernel param index {param_index} out of range for {spec.family}")
    return _GRADS[spec.family](lags, *spec.params)[param_index]


def kernel_lag_grad_from_lags(spec: KernelSpec, lags: np.ndarray) -> np.ndarray:
    """Elementwise derivative of the covariance w.r.t. the (signed) lag."""
    return _LAG_GRAD[spec.family](lags, *spec.params)


def gram(spec: KernelSpec, x, with_noise: bool = False) -> GramMatrix:
    """Gram matrix K with (K)_ij = k(x_i, x_j), plus noise on the diagonal if asked."""
    lags = lag_matrix(x)
    values = kernel_value_from_lags(spec, lags)
    if with_noise:
        values[np.diag_indices_from(values)] += spec.noise_variance
    return GramMatrix(values, with_noise)


def gram_grad(spec: KernelSpec, x, param_index: int) -> GramMatrix:
    """Elementwise derivative of the noisy Gram matrix w.r.t. one parameter.

    The derivative w.r.t. the noise variance (last index) is the identity.
    """
    x = _as_input_vector(x)
    if not 0 <= param_index < spec.n_params:
        raise ValueError(f"param index {param_index} out of range (0..{spec.n_params - 1})")
    if param_index == spec.n_params - 1:
        return GramMatrix(np.eye(len(x)), False)
    return GramMatrix(kernel_grad_from_lags(spec, lag_matrix(x), param_index), False)


def cross_gram(spec: KernelSpec, a, b) -> np.ndarray:
    """Rectangular covariance K(a, b), never including noise."""
    return kernel_value_from_lags(spec, lag_matrix(a, b))


def cross_gram_grad(spec: KernelSpec, a, b, param_index: int) -> np.ndarray:
    """Derivative of the noiseless cross covariance w.r.t. one parameter.

    Zero for the noise-variance index since cross covariances carry no noise.
    """
    if not 0 <= param_index < spec.n_params:
        raise ValueError(f"param index {param_index} out of range (0..{spec.n_params - 1})")
    lags = lag_matrix(a, b)
    if param_index == spec.n_params - 1:
        return np.zeros_like(lags)
    return kernel_grad_from_lags(spec, lags, param_index)


def lag_gradient(spec: KernelSpec, a, b) -> np.ndarray:
    """Matrix of dk/d(lag) at lags ``a_i - b_j``, for input-location gradients."""
    return kernel_lag_grad_from_lags(spec, lag_matrix(a, b))

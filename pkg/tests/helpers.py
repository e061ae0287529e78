"""Shared test utilities: finite-difference oracles and random spec draws."""

import numpy as np

from projgp import KernelSpec

ALL_FAMILIES = ("SE", "Laplace", "RQ", "LocPer")


def central_difference(f, theta, index, step=None):
    """Central finite difference of scalar/array-valued f at theta[index]."""
    theta = np.asarray(theta, dtype=float)
    if step is None:
        step = 1e-6 * max(1.0, abs(theta[index]))
    hi = theta.copy()
    lo = theta.copy()
    hi[index] += step
    lo[index] -= step
    return (f(hi) - f(lo)) / (2.0 * step)


def fd_gradient(f, theta, step=None):
    """Full central-difference gradient of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    return np.array([central_difference(f, theta, j, step) for j in range(theta.size)])


def random_spec(family, rng, noise_floor=0.05):
    """A random positive hyperparameter draw with O(1) scales."""
    v = float(rng.uniform(0.3, 3.0))
    ell = float(rng.uniform(0.4, 2.5))
    noise = float(rng.uniform(noise_floor, 0.5))
    if family == "SE" or family == "Laplace":
        params = (v, ell)
    elif family == "RQ":
        params = (v, ell, float(rng.uniform(0.5, 3.0)))
    elif family == "LocPer":
        params = (v, float(rng.uniform(0.8, 3.0)), ell, float(rng.uniform(1.0, 4.0)))
    else:
        raise ValueError(family)
    return KernelSpec(family, params, noise)


def rel_err(a, b):
    """Entrywise relative error with a floor at 0.1% of the dominant entry.

    Central differences carry absolute noise of roughly 1e-10 times the
    dominant scale, so comparing near-zero entries at their own magnitude
    would only measure oracle noise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    floor = max(1e-8, 1e-3 * float(np.max(np.abs(b), initial=0.0)))
    scale = np.maximum(np.abs(b), floor)
    return float(np.max(np.abs(a - b) / scale))

"""Projected-likelihood objective and its gradient."""

import numpy as np
import pytest

from projgp import Dataset, nll_exact, nll_exact_grad, se
from projgp.gp import LOG_2PI
from projgp.projected import nll_pl, nll_pl_grad, project
from projgp.projections import custom, identity, one_hot, sphere

from helpers import ALL_FAMILIES, fd_gradient, random_spec, rel_err


def _random_rotation(n, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))
    return custom(q / np.linalg.norm(q, axis=0, keepdims=True))


def test_project_identity_recovers_y():
    y = np.arange(6.0)
    out = project(identity(6), y)
    np.testing.assert_array_equal(out.z, y)
    assert out.omega_ref.k == 6


def test_project_one_hot_subsamples():
    pm = one_hot(10, 4, seed=2)
    y = np.random.default_rng(0).standard_normal(10)
    out = project(pm, y)
    idx = np.argmax(pm.omega, axis=0)
    np.testing.assert_array_equal(out.z, y[idx])


def test_project_norm_bounded_by_spectral_norm():
    rng = np.random.default_rng(4)
    pm = sphere(30, 10, seed=4)
    y = rng.standard_normal(30)
    z = project(pm, y).z
    top_singular = np.linalg.svd(pm.omega, compute_uv=False)[0]
    assert np.linalg.norm(z) <= top_singular * np.linalg.norm(y) + 1e-12


def test_project_dimension_mismatch():
    with pytest.raises(ValueError):
        project(identity(4), np.zeros(5))


def test_identity_projection_matches_exact_nll():
    rng = np.random.default_rng(1)
    x = np.sort(rng.uniform(0, 6, size=25))
    y = rng.standard_normal(25)
    data = Dataset(x, y)
    for family in ALL_FAMILIES:
        spec = random_spec(family, rng)
        assert nll_pl(spec, identity(25), data) == pytest.approx(
            nll_exact(spec, data), abs=1e-10
        )


def test_orthogonal_full_rank_projection_matches_exact_nll():
    rng = np.random.default_rng(6)
    x = np.sort(rng.uniform(0, 6, size=20))
    y = rng.standard_normal(20)
    data = Dataset(x, y)
    spec = se(1.2, 1.0, 0.15)
    rotated = nll_pl(spec, _random_rotation(20, seed=3), data)
    assert rotated == pytest.approx(nll_exact(spec, data), rel=1e-8)


def test_single_direction_pure_noise_closed_form():
    rng = np.random.default_rng(9)
    n = 30
    y = rng.standard_normal(n)
    noise = 0.6
    spec = se(1e-12, 1.0, noise)  # essentially white noise
    pm = sphere(n, 1, seed=11)
    z = float(pm.omega[:, 0] @ y)
    expected = 0.5 * (z**2 / noise + np.log(noise) + LOG_2PI)
    assert nll_pl(spec, pm, Dataset(np.arange(float(n)), y)) == pytest.approx(
        expected, rel=1e-9
    )


def test_single_direction_average_recovers_exact_nll():
    # miniature of the expectation identity: E[(w^T y)^2] = |y|^2 / n
    rng = np.random.default_rng(15)
    n, draws = 50, 4000
    y = rng.standard_normal(n)
    noise = 0.8
    spec = se(1e-12, 1.0, noise)
    data = Dataset(np.arange(float(n)), y)
    values = np.array(
        [n * nll_pl(spec, sphere(n, 1, seed=s), data) for s in range(draws)]
    )
    exact = nll_exact(spec, data)
    stderr = values.std(ddof=1) / np.sqrt(draws)
    assert abs(values.mean() - exact) < 3 * stderr


def test_scale_equivariance():
    rng = np.random.default_rng(21)
    n = 24
    x = np.sort(rng.uniform(0, 5, size=n))
    y = rng.standard_normal(n)
    pm = sphere(n, 8, seed=1)
    c = 2.0
    base = nll_pl(se(1.5, 1.2, 0.3), pm, Dataset(x, y))
    scaled = nll_pl(se(c**2 * 1.5, 1.2, c**2 * 0.3), pm, Dataset(x, c * y))
    assert scaled - base == pytest.approx(8 * np.log(c), rel=1e-9)


def test_identity_projection_gradient_matches_exact():
    rng = np.random.default_rng(33)
    x = np.sort(rng.uniform(0, 5, size=15))
    y = rng.standard_normal(15)
    data = Dataset(x, y)
    spec = se(1.1, 0.9, 0.2)
    np.testing.assert_allclose(
        nll_pl_grad(spec, identity(15), data),
        nll_exact_grad(spec, data),
        atol=1e-10,
    )


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_gradient_matches_finite_differences(family):
    rng = np.random.default_rng(55)
    n = 18
    x = np.sort(rng.uniform(0, 5, size=n))
    y = rng.standard_normal(n)
    data = Dataset(x, y)
    for _ in range(6):
        spec = random_spec(family, rng)
        pm = sphere(n, 5, seed=int(rng.integers(1 << 30)))

        def f(theta):
            return nll_pl(spec.with_values(theta), pm, data)

        assert rel_err(nll_pl_grad(spec, pm, data), fd_gradient(f, spec.values())) < 1e-5


def test_noise_gradient_single_orthonormal_direction_closed_form():
    # k = 1: C = w^T (K + sn2 I) w is scalar, dC/dsn2 = w^T w = 1,
    # so the gradient is 0.5 * (1/C - z^2 / C^2).
    rng = np.random.default_rng(77)
    n = 12
    x = np.sort(rng.uniform(0, 4, size=n))
    y = rng.standard_normal(n)
    spec = se(1.3, 0.7, 0.25)
    pm = one_hot(n, 1, seed=5)
    w = pm.omega[:, 0]
    K = 1.3 * np.exp(-0.5 * ((x[:, None] - x[None, :]) / 0.7) ** 2) + 0.25 * np.eye(n)
    c = float(w @ K @ w)
    z = float(w @ y)
    expected = 0.5 * (1.0 / c - z**2 / c**2)
    grad = nll_pl_grad(spec, pm, Dataset(x, y))
    assert grad[-1] == pytest.approx(expected, rel=1e-10)

"""Optimisers over log-transformed hyperparameters and the training driver.

Both optimisers minimise a ``value_and_grad`` callable over an
unconstrained vector and share one stopping rule: the run halts once the
objective has changed by less than ``stop_delta`` in absolute value for
``stop_window`` consecutive iterations (a plateau test; large transient
increases keep the run alive).  Kernel hyperparameters are optimised as
logs so positivity never needs constraints; inducing locations ride
along untransformed.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .gp import Dataset, nll_exact_value_grad_from_lags
from .kernels import KernelSpec, lag_matrix
from .projected import nll_pl_value_grad_from_lags
from .projections import identity, localised, one_hot, repulsive, sphere
from .sparse import InducingSet, init_inducing, neg_elbo_value_grad

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

OBJECTIVES = ("ExactML", "VFE", "PL")
OPTIMISERS = ("Adam", "BFGS")


class TrainingDiverged(RuntimeError):
    """A non-finite objective or gradient appeared mid-run.

    The objective values recorded so far are kept on ``trace``.
    """

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = np.asarray(trace)


@dataclass
class TrainConfig:
    """Objective, optimiser settings, and the objective-specific payload."""

    objective: str = "ExactML"
    optimiser: str = "Adam"
    learning_rate: float = 0.1
    max_iters: int = 2000
    stop_window: int = 5
    stop_delta: float = 1e-2
    seed: int = 0
    num_inducing: Optional[int] = None  # VFE
    num_projections: Optional[int] = None  # PL
    projection_kind: str = "Sphere"  # PL
    optimize_inducing: bool = True  # VFE

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.optimiser not in OPTIMISERS:
            raise ValueError(f"optimiser must be one of {OPTIMISERS}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.stop_window < 1:
            raise ValueError("stop_window must be at least 1")


@dataclass
class TrainResult:
    """Outcome of one optimisation run.

    ``trace`` holds the objective at every iteration (so
    ``iterations == len(trace)`` and ``final_objective == trace[-1]``);
    ``trace_times`` the cumulative wall time when each was recorded.
    """

    params: np.ndarray
    final_objective: float
    iterations: int
    wall_time_s: float
    trace: np.ndarray
    trace_times: np.ndarray
    learnt_spec: Optional[KernelSpec] = None
    learnt_inducing: Optional[InducingSet] = None

    def to_json(self) -> str:
        payload = {
            "final_objective": self.final_objective,
            "iterations": self.iterations,
            "wall_time_s": self.wall_time_s,
            "learnt_spec": None
            if self.learnt_spec is None
            else json.loads(self.learnt_spec.to_json()),
            "learnt_inducing": None
            if self.learnt_inducing is None
            else self.learnt_inducing.locations.tolist(),
        }
        return json.dumps(payload)

    def trace_to_csv(self, path) -> None:
        table = np.column_stack(
            [np.arange(1, self.iterations + 1), self.trace, self.trace_times]
        )
        np.savetxt(
            path, table, delimiter=",", header="iter,objective,elapsed_s", comments=""
        )


def _check_finite(value, grad, trace):
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise TrainingDiverged(
            f"non-finite objective or gradient at iteration {len(trace) + 1}", trace
        )


def _stopped(improvements, config) -> bool:
    if len(improvements) < config.stop_window:
        return False
    recent = improvements[-config.stop_window :]
    return all(abs(step) < config.stop_delta for step in recent)


def adam_minimise(
    value_and_grad: Callable, init, config: TrainConfig
) -> TrainResult:
    """Adam with bias correction in the unconstrained parameter space."""
    theta = np.asarray(init, dtype=float).copy()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    trace, times, improvements = [], [], []
    start = time.perf_counter()
    for t in range(1, config.max_iters + 1):
        value, grad = value_and_grad(theta)
        _check_finite(value, grad, trace)
        trace.append(float(value))
        times.append(time.perf_counter() - start)
        if len(trace) >= 2:
            improvements.append(trace[-2] - trace[-1])
        if _stopped(improvements, config) or t == config.max_iters:
            break
        m = ADAM_BETA1 * m + (1 - ADAM_BETA1) * grad
        v = ADAM_BETA2 * v + (1 - ADAM_BETA2) * grad**2
        m_hat = m / (1 - ADAM_BETA1**t)
        v_hat = v / (1 - ADAM_BETA2**t)
        theta = theta - config.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    wall = time.perf_counter() - start
    return TrainResult(
        theta, trace[-1], len(trace), wall, np.array(trace), np.array(times)
    )


def bfgs_minimise(
    value_and_grad: Callable, init, config: TrainConfig
) -> TrainResult:
    """BFGS with a coarse doubling/halving search along each direction.

    The trial step starts at ``learning_rate`` times the search direction.
    A step that increases the objective is halved (at most 10 times per
    iteration; if nothing helps the smallest step is taken anyway and the
    stopping rule soon ends the run).  A step that decreases it is doubled
    while the decrease keeps improving, up to the full BFGS direction, so
    the endgame approaches quasi-Newton steps even at a small base rate.
    Any single iteration's displacement is capped at norm 1 until the
    curvature model brings direction norms down to that scale, which keeps
    early raw-gradient directions from overshooting into flat basins.
    """
    theta = np.asarray(init, dtype=float).copy()
    dim = theta.size
    H = np.eye(dim)
    trace, times, improvements = [], [], []
    start = time.perf_counter()
    value, grad = value_and_grad(theta)
    _check_finite(value, grad, trace)
    trace.append(float(value))
    times.append(time.perf_counter() - start)
    max_displacement = 1.0
    for _ in range(2, config.max_iters + 1):
        direction = -H @ grad

        def try_step(step):
            candidate = theta + step * direction
            cand_value, cand_grad = value_and_grad(candidate)
            ok = np.isfinite(cand_value) and np.all(np.isfinite(cand_grad))
            return ok, candidate, cand_value, cand_grad

        norm = float(np.linalg.norm(direction))
        step_cap = max(1.0, config.learning_rate)
        if norm > max_displacement:
            step_cap = min(step_cap, max_displacement / norm)
        step = min(config.learning_rate, step_cap)
        ok, new_theta, new_value, new_grad = try_step(step)
        if ok and new_value <= value:
            while step < step_cap:
                bigger = min(2.0 * step, step_cap)
                ok2, cand_t, cand_v, cand_g = try_step(bigger)
                if not (ok2 and cand_v < new_value):
                    break
                step, new_theta, new_value, new_grad = bigger, cand_t, cand_v, cand_g
        else:
            for _ in range(10):
                step *= 0.5
                ok, new_theta, new_value, new_grad = try_step(step)
                if ok and new_value <= value:
                    break
        _check_finite(new_value, new_grad, trace)

        s = new_theta - theta
        yk = new_grad - grad
        sy = float(s @ yk)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yk):
            rho = 1.0 / sy
            Hy = H @ yk
            H = (
                H
                - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                + rho**2 * float(yk @ Hy) * np.outer(s, s)
                + rho * np.outer(s, s)
            )
        theta, value, grad = new_theta, float(new_value), new_grad
        trace.append(value)
        times.append(time.perf_counter() - start)
        improvements.append(trace[-2] - trace[-1])
        if _stopped(improvements, config):
            break
    wall = time.perf_counter() - start
    return TrainResult(
        theta, trace[-1], len(trace), wall, np.array(trace), np.array(times)
    )


def default_init_spec(family: str, data: Dataset) -> KernelSpec:
    """Scale-aware initial hyperparameters for a training run.

    variance = var(y), lengthscales = range(x)/10, noise = 0.1 var(y);
    RQ shape starts at 1, the periodic kernel's period at range(x)/5.
    """
    spread = float(np.max(data.x) - np.min(data.x)) or 1.0
    var_y = float(np.var(data.y)) or 1.0
    ell = spread / 10.0
    noise = 0.1 * var_y
    if family in ("SE", "Laplace"):
        params = (var_y, ell)
    elif family == "RQ":
        params = (var_y, ell, 1.0)
    elif family == "LocPer":
        params = (var_y, spread / 5.0, ell, ell)
    else:
        raise ValueError(f"unknown kernel family {family!r}")
    return KernelSpec(family, params, noise)


def _sample_projection(kind, data: Dataset, k, seed):
    if kind == "Sphere":
        return sphere(data.n, k, seed)
    if kind == "Repulsive":
        return repulsive(data.n, k, seed)
    if kind == "Localised":
        return localised(data.x, k)
    if kind == "OneHot":
        return one_hot(data.n, k, seed)
    if kind == "Identity":
        return identity(data.n)
    raise ValueError(f"unsupported projection kind for training: {kind!r}")


def train(spec_init: KernelSpec, data: Dataset, config: TrainConfig) -> TrainResult:
    """Fit hyperparameters (and inducing locations for VFE) per the config.

    The wall time in the result covers the optimisation loop only; the
    projection for PL is sampled once per run from ``config.seed`` and
    held fixed throughout.
    """
    lags = lag_matrix(data.x)
    y = data.y
    n_hyper = spec_init.n_params

    if config.objective == "ExactML":

        def fun(vec):
            spec = spec_init.with_values(np.exp(vec))
            value, grad = nll_exact_value_grad_from_lags(spec, lags, y)
            return value, grad * np.exp(vec)

        init = np.log(spec_init.values())

    elif config.objective == "PL":
        if config.num_projections is None:
            raise ValueError("PL training needs num_projections")
        omega = _sample_projection(
            config.projection_kind, data, config.num_projections, config.seed
        )

        def fun(vec):
            spec = spec_init.with_values(np.exp(vec))
            value, grad = nll_pl_value_grad_from_lags(spec, omega, lags, y)
            return value, grad * np.exp(vec)

        init = np.log(spec_init.values())

    elif config.objective == "VFE":
        if config.num_inducing is None:
            raise ValueError("VFE training needs num_inducing")
        inducing0 = init_inducing(data.x, config.num_inducing, seed=config.seed)
        if config.optimize_inducing:

            def fun(vec):
                spec = spec_init.with_values(np.exp(vec[:n_hyper]))
                inducing = InducingSet(vec[n_hyper:])
                value, grad = neg_elbo_value_grad(spec, inducing, data)
                grad[:n_hyper] *= np.exp(vec[:n_hyper])
                return value, grad

            init = np.concatenate([np.log(spec_init.values()), inducing0.locations])
        else:

            def fun(vec):
                spec = spec_init.with_values(np.exp(vec))
                value, grad = neg_elbo_value_grad(spec, inducing0, data)
                return value, grad[:n_hyper] * np.exp(vec)

            init = np.log(spec_init.values())

    minimise = adam_minimise if config.optimiser == "Adam" else bfgs_minimise
    result = minimise(fun, init, config)

    result.learnt_spec = spec_init.with_values(np.exp(result.params[:n_hyper]))
    if config.objective == "VFE":
        if config.optimize_inducing:
            result.learnt_inducing = InducingSet(result.params[n_hyper:])
        else:
            result.learnt_inducing = init_inducing(
                data.x, config.num_inducing, seed=config.seed
            )
    return result

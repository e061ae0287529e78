"""Exact Fisher-information loss of projecting the data, and its spectra.

For a zero-mean Gaussian with (noise-inclusive) covariance K and a
projection Omega, conditioning the full data Y on Z = Omega^T Y leaves

    mu_{Y|Z}    = K Omega (Omega^T K Omega)^-1 Z
    Sigma_{Y|Z} = K - K Omega (Omega^T K Omega)^-1 Omega^T K

and the Fisher information lost about a covariance parameter is

    dI = tr[ 0.5 (Kbar Sigma)^2 + Kbar Sigma Kbar E[mu mu^T] ],

with Kbar = K^-1 dK K^-1 and E[mu mu^T] = K Omega (Omega^T K Omega)^-1
Omega^T K.  Everything here is dense diagnostics for moderate n; the
training objectives never call into this module.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from ._linalg import FactorizationError, inv_from_chol, jittered_cholesky, solve_chol
from .kernels import GramMatrix, KernelSpec, gram, gram_grad
from .projections import ProjectionMatrix


@dataclass
class ConditionalMoments:
    """Coefficients of the conditional mean, and the conditional covariance."""

    mu_coeff: np.ndarray  # n x k; mu_{Y|Z} = mu_coeff @ z
    sigma: np.ndarray  # n x n


@dataclass
class InfoLossReport:
    """Per-projection information-loss summary with spectra.

    ``fisher_full``, ``fisher_proj`` and ``delta`` are aligned with the
    spec's ``param_names`` (noise variance last).  Spectra are descending.
    """

    label: str
    param_names: tuple
    fisher_full: np.ndarray
    fisher_proj: np.ndarray
    delta: np.ndarray
    gram_spectrum: np.ndarray
    sigma_spectrum: np.ndarray

    @property
    def trace_gram(self) -> float:
        return float(np.sum(self.gram_spectrum))

    @property
    def trace_sigma(self) -> float:
        return float(np.sum(self.sigma_spectrum))


def conditional_moments(
    gram_with_noise: GramMatrix, omega: ProjectionMatrix
) -> ConditionalMoments:
    """Moments of Y | Z from the noise-inclusive Gram matrix."""
    if not gram_with_noise.includes_noise:
        raise ValueError("conditional moments are defined on the noisy Gram matrix")
    K = gram_with_noise.values
    W = K @ omega.omega
    P = omega.omega.T @ W
    P = 0.5 * (P + P.T)
    try:
        Lp = np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise FactorizationError(
            "projected Gram matrix is rank deficient"
        ) from None
    mu_coeff = solve_chol(Lp, W.T).T
    sigma = K - mu_coeff @ W.T
    sigma = 0.5 * (sigma + sigma.T)
    return ConditionalMoments(mu_coeff, sigma)


def fisher_full(spec: KernelSpec, x, param_index: int) -> float:
    """Fisher information of the full data: 0.5 tr((K^-1 dK)^2)."""
    K = gram(spec, x, with_noise=True).values
    dK = gram_grad(spec, x, param_index).values
    L, _ = jittered_cholesky(K)
    A = solve_chol(L, dK)
    return 0.5 * float(np.sum(A * A.T))


def fisher_projected(spec: KernelSpec, x, omega: ProjectionMatrix, param_index: int) -> float:
    """Fisher information retained by Z: 0.5 tr((P^-1 dP)^2), P = Omega^T K Omega."""
    K = gram(spec, x, with_noise=True).values
    dK = gram_grad(spec, x, param_index).values
    W = omega.omega
    P = 0.5 * ((W.T @ (K @ W)) + (W.T @ (K @ W)).T)
    dP = W.T @ (dK @ W)
    Lp, _ = jittered_cholesky(P)
    B = solve_chol(Lp, dP)
    return 0.5 * float(np.sum(B * B.T))


def delta_information(
    spec: KernelSpec, x, omega: ProjectionMatrix, param_index: int
) -> float:
    """Exact information loss for one parameter, from the closed form."""
    K = gram(spec, x, with_noise=True).values
    dK = gram_grad(spec, x, param_index).values
    moments = conditional_moments(GramMatrix(K, True), omega)

    L, _ = jittered_cholesky(K)
    Kinv = inv_from_chol(L)
    Kbar = Kinv @ dK @ Kinv
    BS = Kbar @ moments.sigma
    # E[mu mu^T] = (mu_coeff) (K Omega)^T
    Emu = moments.mu_coeff @ (K @ omega.omega).T
    quad = BS @ Kbar
    return 0.5 * float(np.sum(BS * BS.T)) + float(np.sum(quad * Emu.T))


def spectra_report(spec: KernelSpec, x, omegas) -> list:
    """Information-loss reports and spectra for a list of projections.

    Projections may be passed as ProjectionMatrix objects or as
    (label, ProjectionMatrix) pairs when distinct labels are wanted.
    """
    K = gram(spec, x, with_noise=True)
    gram_eigs = np.sort(np.linalg.eigvalsh(K.values))[::-1]
    full = np.array(
        [fisher_full(spec, x, j) for j in range(spec.n_params)]
    )
    reports = []
    for entry in omegas:
        label, omega = entry if isinstance(entry, tuple) else (entry.kind, entry)
        moments = conditional_moments(K, omega)
        sigma_eigs = np.sort(np.linalg.eigvalsh(moments.sigma))[::-1]
        proj = np.array(
            [fisher_projected(spec, x, omega, j) for j in range(spec.n_params)]
        )
        delta = np.array(
            [delta_information(spec, x, omega, j) for j in range(spec.n_params)]
        )
        reports.append(
            InfoLossReport(
                label=label,
                param_names=spec.param_names,
                fisher_full=full,
                fisher_proj=proj,
                delta=delta,
                gram_spectrum=gram_eigs,
                sigma_spectrum=sigma_eigs,
            )
        )
    return reports


def reports_to_csv(reports, path) -> None:
    """One row per eigenvalue index: the Gram spectrum, then one column per label."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "gram"] + [r.label for r in reports])
        spectrum = reports[0].gram_spectrum
        for i in range(spectrum.size):
            writer.writerow(
                [i, repr(spectrum[i])] + [repr(r.sigma_spectrum[i]) for r in reports]
            )


def reports_to_json(reports, path) -> None:
    """Summary of traces and per-parameter information losses."""
    payload = {
        "trace_gram": reports[0].trace_gram if reports else None,
        "projections": {
            r.label: {
                "trace_sigma": r.trace_sigma,
                "fisher_full": dict(zip(r.param_names, r.fisher_full.tolist())),
                "fisher_proj": dict(zip(r.param_names, r.fisher_proj.tolist())),
                "delta": dict(zip(r.param_names, r.delta.tolist())),
            }
            for r in reports
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)

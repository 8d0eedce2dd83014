"""Covariance assembly, contrasts, and PSD efficiency diagnostics."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateSampleError,
    DimensionMismatchError,
    GradientNonFiniteError,
    NumericError,
)
from .results import Contrast, ContrastResult, EstimatorResult, InfluenceDecomposition, PsdReport


def vcov_from_influence(inf) -> np.ndarray:
    """Covariance of the mean-vector estimate from influence rows.

    Computes (1/n^2) * sum_i r_i r_i' with the rows centered at their
    column means first. Centering costs nothing (the estimated influence
    means are already within sampling error of zero) and removes
    finite-sample drift. The output is symmetrized so it equals its own
    transpose bitwise, and is PSD up to roundoff by construction.
    """
    rows = inf.rows if isinstance(inf, InfluenceDecomposition) else np.asarray(inf)
    n = rows.shape[0]
    if n < 2:
        raise DegenerateSampleError("need at least 2 influence rows")
    centered = rows - rows.mean(axis=0)
    M = centered.T @ centered / float(n) ** 2
    return (M + M.T) / 2.0


def contrast_estimate(res: EstimatorResult, c: Contrast) -> ContrastResult:
    """Point estimate and delta-method standard error of a scalar target.

    Linear contrasts use tau = a'mu exactly with se = sqrt(a'Va). Smooth
    contrasts use the analytic gradient if the contrast carries one, and
    central differences with step 1e-6 * max(1, |mu_g|) otherwise.
    """
    mu = res.mu_hat
    V = res.vcov
    G = mu.shape[0]
    if c.is_linear:
        a = c.weights
        if a.shape[0] != G:
            raise DimensionMismatchError(
                f"contrast has {a.shape[0]} weights but result has {G} arms"
            )
        tau = float(a @ mu)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = float(c.fn(mu))
            if c.gradient is not None:
                a = np.asarray(c.gradient(mu), dtype=np.float64)
                if a.shape[0] != G:
                    raise DimensionMismatchError("gradient length does not match arms")
            else:
                a = np.empty(G)
                for g in range(G):
                    h = 1e-6 * max(1.0, abs(mu[g]))
                    up, dn = mu.copy(), mu.copy()
                    up[g] += h
                    dn[g] -= h
                    a[g] = (c.fn(up) - c.fn(dn)) / (2.0 * h)
        if not np.isfinite(a).all() or not np.isfinite(tau):
            raise GradientNonFiniteError(f"contrast {c.name!r} not finite at mu_hat")
    var = float(a @ V @ a)
    se = float(np.sqrt(max(var, 0.0)))
    return ContrastResult(tau_hat=tau, se=se, contrast=c, source=res.estimator_id)


def psd_compare(vA: np.ndarray, vB: np.ndarray, label: str = "", tol: float = 1e-8) -> PsdReport:
    """Eigenvalue report on vA - vB, flagging PSD under tolerance.

    Both inputs must be symmetric (to 1e-8 relative); the difference is
    symmetrized before the eigendecomposition so roundoff cannot produce
    complex spectra.
    """
    vA = np.asarray(vA, dtype=np.float64)
    vB = np.asarray(vB, dtype=np.float64)
    if vA.shape != vB.shape or vA.ndim != 2 or vA.shape[0] != vA.shape[1]:
        raise DimensionMismatchError("psd_compare needs two square matrices of equal size")
    for name, M in (("first", vA), ("second", vB)):
        scale = max(1.0, float(np.abs(M).max()))
        if np.abs(M - M.T).max() > 1e-8 * scale:
            raise NumericError(f"{name} matrix is not symmetric")
    D = vA - vB
    eig = scipy.linalg.eigvalsh((D + D.T) / 2.0)
    return PsdReport(
        matrix_label=label,
        min_eigenvalue=float(eig[0]),
        max_eigenvalue=float(eig[-1]),
        tol=tol,
    )

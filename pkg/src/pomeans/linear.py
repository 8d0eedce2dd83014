"""Linear estimators of the arm-mean vector.

Three estimators of mu = (mu_1, ..., mu_G)':

* ``estimate_sm``  — subsample means, the per-arm averages;
* ``estimate_sra`` — separate regression adjustment, one OLS per arm
  evaluated at the full-sample covariate mean;
* ``estimate_pra`` — pooled regression adjustment, one OLS on the arm
  indicators plus full-sample-demeaned covariates with common slopes.

Each returns the point estimates together with an
:class:`InfluenceDecomposition` whose rows realize the estimator's
first-order sampling error and whose named blocks decompose them:
L + Q for subsample means, K + Q for separate adjustment, and
F + K + Q for pooled adjustment, where

* L stacks ``W_g * Xdot beta_g / rho_g``   (arm-selected predictable part),
* K stacks ``Xdot beta_g``                 (everyone's predictable part),
* Q stacks ``W_g * U(g) / rho_g``          (arm-selected projection error),
* F stacks ``(W_g - rho_g)/rho_g * Xdot (beta_g - beta)`` (slope-pooling
  penalty, zero when slopes are homogeneous),

with Xdot the covariates demeaned at the full-sample mean and beta the
rho-weighted pooled slope. Per-arm slopes inside F and K always come
from auxiliary per-arm fits, which the pooled fit itself does not
produce.

Covariances: SM and SRA use (1/N) times the sample covariance of their
influence rows. PRA uses the native stacked-moment sandwich shared with
the pooled quasi-likelihood estimator (see
:func:`pomeans.qmle.pooled_stacked_vcov`), which is the construction
that makes the Gaussian-family nonlinear estimator reduce to PRA
exactly, covariance included.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, demean_covariates
from .errors import ArmTooSmallError, RankDeficientError
from .families import get_family
from .inference import vcov_from_influence
from .linalg import ols
from .qmle import pooled_stacked_vcov
from .results import EstimatorResult, InfluenceDecomposition


def _arm_ols(ds: Dataset, min_rows: int):
    """Per-arm OLS of Y on (1, X); returns intercepts, slopes, residuals."""
    G, K = ds.n_arms, ds.n_covariates
    alpha = np.zeros(G)
    beta = np.zeros((G, K))
    resid = np.zeros(ds.n)
    sizes = ds.group_sizes
    for g in range(1, G + 1):
        if sizes[g - 1] < min_rows:
            raise ArmTooSmallError(ds.labels[g - 1], int(sizes[g - 1]), min_rows)
    for g in range(1, G + 1):
        mask = ds.arm_mask(g)
        Zg = np.hstack([np.ones((int(sizes[g - 1]), 1)), ds.covariates[mask]])
        try:
            fit = ols(ds.outcome[mask], Zg)
        except RankDeficientError as exc:
            raise RankDeficientError(exc.column, exc.rank, arm=ds.labels[g - 1]) from exc
        alpha[g - 1] = fit.coefficients[0]
        beta[g - 1] = fit.coefficients[1:]
        resid[mask] = fit.residuals
    return alpha, beta, resid


def estimate_sm(ds: Dataset) -> tuple[EstimatorResult, InfluenceDecomposition]:
    """Subsample means: mu_hat_g is the within-arm average of Y.

    The influence rows collapse to ``W_g (Y - Ybar_g) / rho_g``, so the
    vcov diagonal equals the within-arm variance (divisor N_g) over N_g.
    When covariates are present they are used only to split the rows
    into the L and Q blocks via auxiliary per-arm slopes.
    """
    G = ds.n_arms
    W = ds.indicators()
    rho = ds.rho_hat
    ybar = np.array([ds.outcome[ds.arm_mask(g)].mean() for g in range(1, G + 1)])

    rows = W * (ds.outcome[:, None] - ybar[None, :]) / rho[None, :]
    blocks = {"L": np.zeros_like(rows), "Q": rows}
    if ds.n_covariates:
        try:
            _, beta, _ = _arm_ols(ds, ds.n_covariates + 2)
        except (ArmTooSmallError, RankDeficientError):
            beta = None  # blocks stay at the no-covariate split
        if beta is not None:
            xdot, _ = demean_covariates(ds)
            L = W * (xdot @ beta.T) / rho[None, :]
            Q = rows - L
            rows = L + Q  # re-sum so the stored rows equal L + Q bitwise
            blocks = {"L": L, "Q": Q}

    dec = InfluenceDecomposition(kind="linear-SM", rows=rows, blocks=blocks)
    res = EstimatorResult(
        estimator_id="SM",
        mu_hat=ybar,
        vcov=vcov_from_influence(rows),
        group_sizes=ds.group_sizes,
        rho_hat=rho,
        labels=ds.labels,
        coefficients={"mu": ybar.copy()},
    )
    return res, dec


def estimate_sra(ds: Dataset) -> tuple[EstimatorResult, InfluenceDecomposition]:
    """Separate regression adjustment.

    Per-arm OLS of Y on (1, X) over that arm's rows, evaluated at the
    full-sample covariate mean: mu_hat_g = alpha_g + Xbar beta_g, which
    equals the all-rows average of the arm-g imputations. Every arm
    needs at least K + 2 rows so one residual degree of freedom remains.
    """
    G, K = ds.n_arms, ds.n_covariates
    alpha, beta, resid = _arm_ols(ds, K + 2)
    xdot, xbar = demean_covariates(ds)
    mu_hat = alpha + beta @ xbar if K else alpha.copy()

    W = ds.indicators()
    rho = ds.rho_hat
    Kblk = xdot @ beta.T if K else np.zeros((ds.n, G))
    Qblk = W * resid[:, None] / rho[None, :]
    rows = Kblk + Qblk

    dec = InfluenceDecomposition(
        kind="linear-SRA", rows=rows, blocks={"K": Kblk, "Q": Qblk}
    )
    res = EstimatorResult(
        estimator_id="SRA",
        mu_hat=mu_hat,
        vcov=vcov_from_influence(rows),
        group_sizes=ds.group_sizes,
        rho_hat=rho,
        labels=ds.labels,
        coefficients={"alpha": alpha, "beta": beta},
    )
    return res, dec


def estimate_pra(ds: Dataset) -> tuple[EstimatorResult, InfluenceDecomposition]:
    """Pooled regression adjustment.

    One OLS of Y on the G arm indicators plus full-sample-demeaned
    covariates (no global intercept); the indicator coefficients are the
    arm means and the common slope is shared across arms. The influence
    decomposition needs per-arm slopes for its F block, so an auxiliary
    per-arm OLS always runs alongside.
    """
    G, K = ds.n_arms, ds.n_covariates
    W = ds.indicators()
    rho = ds.rho_hat
    xdot, xbar = demean_covariates(ds)

    design = np.hstack([W, xdot]) if K else W
    fit = ols(ds.outcome, design)
    mu_hat = fit.coefficients[:G]
    beta_pool = fit.coefficients[G:]

    if K:
        _, beta_by_arm, resid = _arm_ols(ds, K + 1)
        delta = beta_by_arm - beta_pool[None, :]
        Fblk = (W - rho[None, :]) / rho[None, :] * (xdot @ delta.T)
        Kblk = xdot @ beta_by_arm.T
    else:
        beta_by_arm = np.zeros((G, 0))
        delta = np.zeros((G, 0))
        resid = fit.residuals
        Fblk = np.zeros((ds.n, G))
        Kblk = np.zeros((ds.n, G))
    Qblk = W * resid[:, None] / rho[None, :]
    rows = Fblk + Kblk + Qblk

    gaussian = get_family("gaussian-linear")
    gamma = mu_hat - (xbar @ beta_pool if K else 0.0)
    vcov, _, _ = pooled_stacked_vcov(
        ds.outcome, ds.covariates, W, gaussian, gamma, beta_pool, mu_hat
    )

    dec = InfluenceDecomposition(
        kind="linear-PRA", rows=rows, blocks={"F": Fblk, "K": Kblk, "Q": Qblk}
    )
    res = EstimatorResult(
        estimator_id="PRA",
        mu_hat=mu_hat,
        vcov=vcov,
        group_sizes=ds.group_sizes,
        rho_hat=rho,
        labels=ds.labels,
        coefficients={
            "mu": mu_hat.copy(),
            "beta_pooled": beta_pool.copy(),
            "beta_by_arm": beta_by_arm,
            "delta": delta,
        },
    )
    return res, dec

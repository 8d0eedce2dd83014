"""Nonlinear regression adjustment via quasi-maximum likelihood.

Fits any of the canonical mean/quasi-log-likelihood pairs from
:mod:`pomeans.families` by Newton steps with expected-information
weights (IRLS) and step halving, then turns the fits into arm-mean
estimates two ways:

* separate (one fit per arm, counterfactual predictions averaged over
  the full sample), with an influence-function covariance built from
  the estimated per-observation contributions; and
* pooled (arm intercepts plus common slopes), with a stacked-moment
  sandwich covariance that augments the pooled score with one
  mean-recovery condition per arm. The sandwich is implemented natively
  here; no external statistical package is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import (
    NoConvergenceError,
    RankDeficientError,
    SeparationError,
)
from .families import Family, get_family
from .inference import vcov_from_influence
from .linalg import ols
from .results import EstimatorResult, InfluenceDecomposition

SCORE_TOL = 1e-8
QLL_TOL = 1e-12
MAX_ITER = 100
MAX_HALVINGS = 20
SEPARATION_COEF = 30.0


@dataclass
class QmleFit:
    coefficients: np.ndarray
    iterations: int
    converged: bool
    score_norm: float
    weighted_hessian: np.ndarray


def qmle_fit(y, X, family, trials=None, max_iter: int = MAX_ITER) -> QmleFit:
    """Maximize the family's quasi-log-likelihood over index coefficients.

    Newton/IRLS with step halving (at most 20 halvings per step).
    Convergence requires the score sup-norm to fall below
    ``1e-8 * max(1, |QLL|)`` with the relative QLL change below 1e-12.
    Because every family uses its canonical link, the score is
    ``X'(y - mean)``, so at the optimum every design column is orthogonal
    to the raw residuals.

    Starting values come from a least-squares fit to the link-transformed
    outcome clamped away from the boundaries, which doubles as the rank
    check on the design.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    family = get_family(family)
    family.check_support(y, trials)
    logistic = family.id in ("bernoulli-logistic", "binomial-logistic")

    b = ols(family.start_eta(y, trials), X).coefficients
    with np.errstate(over="ignore", invalid="ignore"):
        eta = X @ b
        qll = family.qll(y, eta, trials)
        last_change = np.inf
        iterations = 0
        score = np.zeros(X.shape[1])
        H = np.eye(X.shape[1])
        for _ in range(max_iter):
            mu = family.conditional_mean(eta, trials)
            score = X.T @ (y - mu)
            score_norm = float(np.abs(score).max())
            scale = max(1.0, abs(qll))
            if score_norm <= SCORE_TOL * scale and last_change <= QLL_TOL * scale:
                w = np.maximum(family.weights(eta, trials), 1e-10)
                H = X.T @ (X * w[:, None])
                return QmleFit(b, iterations, True, score_norm, H)
            if logistic and np.abs(b).max() > SEPARATION_COEF:
                raise SeparationError(float(np.abs(b).max()))

            w = np.maximum(family.weights(eta, trials), 1e-10)
            H = X.T @ (X * w[:, None])
            try:
                step = np.linalg.solve(H, score)
            except np.linalg.LinAlgError:
                raise NoConvergenceError(score_norm, iterations)

            t = 1.0
            accepted = False
            for _ in range(MAX_HALVINGS + 1):
                b_new = b + t * step
                eta_new = X @ b_new
                qll_new = family.qll(y, eta_new, trials)
                if np.isfinite(qll_new) and qll_new >= qll - QLL_TOL * scale:
                    accepted = True
                    break
                t /= 2.0
            if not accepted:
                raise NoConvergenceError(score_norm, iterations)
            last_change = abs(qll_new - qll)
            b, eta, qll = b_new, eta_new, qll_new
            iterations += 1

    mu = family.conditional_mean(eta, trials)
    score_norm = float(np.abs(X.T @ (y - mu)).max())
    raise NoConvergenceError(score_norm, iterations)


def _with_intercept(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _rewrap_arm(exc, label):
    if isinstance(exc, RankDeficientError):
        return RankDeficientError(exc.column, exc.rank, arm=label)
    if isinstance(exc, NoConvergenceError):
        return NoConvergenceError(exc.score_norm, exc.iterations, arm=label)
    if isinstance(exc, SeparationError):
        return SeparationError(exc.max_coef, arm=label)
    return exc


def estimate_nsra(
    ds: Dataset, family, robust_vcov: bool = False
) -> tuple[EstimatorResult, InfluenceDecomposition]:
    """Separate nonlinear regression adjustment.

    One quasi-likelihood fit per arm on that arm's rows; each arm mean
    is the average predicted conditional mean over *all* N rows (the
    imputation view). The influence rows add a prediction-dispersion
    block H (deviation of each row's predicted mean from the arm mean)
    and a score-propagation block J that channels the fit's sampling
    error through the averaged mean gradient and weighted design moment.

    ``robust_vcov=True`` switches to a stacked-moment sandwich over the
    per-arm scores plus mean-recovery conditions; the default covariance
    is the H/J influence form.
    """
    family = get_family(family)
    n, G = ds.n, ds.n_arms
    Z = _with_intercept(ds.covariates)
    p = Z.shape[1]
    W = ds.indicators()
    rho = ds.rho_hat
    trials = ds.trials

    coefs = np.zeros((G, p))
    fits = []
    for g in range(1, G + 1):
        mask = ds.arm_mask(g)
        t_arm = trials[mask] if trials is not None else None
        try:
            fit = qmle_fit(ds.outcome[mask], Z[mask], family, t_arm)
        except Exception as exc:  # noqa: BLE001 - re-raise with the arm label
            raise _rewrap_arm(exc, ds.labels[g - 1]) from exc
        coefs[g - 1] = fit.coefficients
        fits.append(fit)

    mu_hat = np.zeros(G)
    Hblk = np.zeros((n, G))
    Jblk = np.zeros((n, G))
    arm_score_parts = []
    for g in range(G):
        eta_g = Z @ coefs[g]
        m_g = family.conditional_mean(eta_g, trials)
        mu_hat[g] = m_g.mean()
        Hblk[:, g] = m_g - mu_hat[g]
        d_g = family.mean_gradient_scale(eta_g, trials)
        M_g = (d_g[:, None] * Z).mean(axis=0)
        C_g = Z.T @ (d_g[:, None] * Z) / n
        c_g = np.linalg.solve(C_g, M_g)
        u_g = ds.outcome - m_g
        Jblk[:, g] = W[:, g] * (Z @ c_g) * u_g / rho[g]
        arm_score_parts.append((d_g, u_g))

    rows = Hblk + Jblk
    dec = InfluenceDecomposition(kind="qmle-SRA", rows=rows, blocks={"H": Hblk, "J": Jblk})

    if robust_vcov:
        vcov = _nsra_sandwich(ds, Z, W, family, coefs, mu_hat, arm_score_parts)
    else:
        vcov = vcov_from_influence(rows)

    res = EstimatorResult(
        estimator_id="NSRA",
        mu_hat=mu_hat,
        vcov=vcov,
        group_sizes=ds.group_sizes,
        rho_hat=rho,
        labels=ds.labels,
        family=family.id,
        coefficients={"alpha": coefs[:, 0].copy(), "beta": coefs[:, 1:].copy()},
    )
    return res, dec


def _nsra_sandwich(ds, Z, W, family, coefs, mu_hat, arm_score_parts):
    """Fully robust stacked sandwich for the separate estimator.

    Parameters are the G per-arm coefficient vectors followed by the G
    means; moments are the per-arm scores and mean-recovery conditions.
    """
    n, G = ds.n, ds.n_arms
    p = Z.shape[1]
    dim = G * p + G
    psi = np.zeros((n, dim))
    J = np.zeros((dim, dim))
    for g in range(G):
        d_g, u_g = arm_score_parts[g]
        sl = slice(g * p, (g + 1) * p)
        psi[:, sl] = Z * (W[:, g] * u_g)[:, None]
        psi[:, G * p + g] = mu_hat[g] - family.conditional_mean(Z @ coefs[g], ds.trials)
        J[sl, sl] = -(Z.T @ (Z * (W[:, g] * d_g)[:, None])) / n
        J[G * p + g, sl] = -(d_g[:, None] * Z).mean(axis=0)
        J[G * p + g, G * p + g] = 1.0
    B = psi.T @ psi / n
    Jinv = np.linalg.inv(J)
    V = Jinv @ B @ Jinv.T / n
    V = V[G * p:, G * p:]
    return (V + V.T) / 2.0


def pooled_stacked_vcov(
    y: np.ndarray,
    X: np.ndarray,
    W: np.ndarray,
    family: Family,
    gamma: np.ndarray,
    beta: np.ndarray,
    mu_hat: np.ndarray,
    trials=None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stacked-moment sandwich for pooled regression adjustment.

    Moment conditions: the pooled quasi-likelihood score on the design
    ``(W, X)`` stacked with the G mean-recovery conditions
    ``mu_g - mean_i m(gamma_g + X_i beta) = 0``, solved by the standard
    M-estimation sandwich. Returns ``(vcov, h_rows, j_rows)`` where the
    two row blocks add up to the per-observation influence contributions
    of the arm means (so their centered outer-product average over n,
    divided by n, reproduces ``vcov``).
    """
    n, K = X.shape
    G = W.shape[1]
    p = G + K
    Zt = np.hstack([W, X])
    theta = np.concatenate([gamma, beta])

    eta_fit = Zt @ theta
    resid = y - family.conditional_mean(eta_fit, trials)
    s = Zt * resid[:, None]
    d_fit = family.weights(eta_fit, trials)
    Hmat = Zt.T @ (Zt * d_fit[:, None]) / n

    ghat = np.zeros((n, G))
    D = np.zeros((G, p))
    for g in range(G):
        eta_g = gamma[g] + X @ beta
        m_g = family.conditional_mean(eta_g, trials)
        ghat[:, g] = mu_hat[g] - m_g
        d_g = family.mean_gradient_scale(eta_g, trials)
        D[g, g] = d_g.mean()
        if K:
            D[g, G:] = (d_g[:, None] * X).mean(axis=0)

    # influence rows for mu: D H^{-1} s_i  +  (m_ig - mu_g)
    A = np.linalg.solve(Hmat.T, D.T).T
    j_rows = s @ A.T
    h_rows = -ghat
    vcov = vcov_from_influence(h_rows + j_rows)
    return vcov, h_rows, j_rows


def estimate_npra(ds: Dataset, family) -> tuple[EstimatorResult, InfluenceDecomposition]:
    """Pooled nonlinear regression adjustment.

    One quasi-likelihood fit of the outcome on the G arm indicators plus
    the raw covariates (no global intercept); arm means average the
    counterfactual predictions ``m(gamma_g + X_i beta)`` over all rows.
    The covariance comes from the stacked-moment sandwich in
    :func:`pooled_stacked_vcov`.
    """
    family = get_family(family)
    G = ds.n_arms
    W = ds.indicators()
    X = ds.covariates
    Zt = np.hstack([W, X])

    fit = qmle_fit(ds.outcome, Zt, family, ds.trials)
    gamma = fit.coefficients[:G]
    beta = fit.coefficients[G:]

    mu_hat = np.zeros(G)
    for g in range(G):
        mu_hat[g] = family.conditional_mean(gamma[g] + X @ beta, ds.trials).mean()

    vcov, h_rows, j_rows = pooled_stacked_vcov(
        ds.outcome, X, W, family, gamma, beta, mu_hat, ds.trials
    )
    dec = InfluenceDecomposition(
        kind="qmle-NPRA", rows=h_rows + j_rows, blocks={"H": h_rows, "J": j_rows}
    )
    res = EstimatorResult(
        estimator_id="NPRA",
        mu_hat=mu_hat,
        vcov=vcov,
        group_sizes=ds.group_sizes,
        rho_hat=ds.rho_hat,
        labels=ds.labels,
        family=family.id,
        coefficients={"gamma": gamma.copy(), "beta_pooled": beta.copy()},
    )
    return res, dec

import numpy as np
import pytest
from scipy.special import expit

from pomeans import (
    Dataset,
    NoConvergenceError,
    SeparationError,
    estimate_npra,
    estimate_nsra,
    estimate_pra,
    estimate_sra,
    get_family,
    qmle_fit,
)

from .conftest import simulated_dataset


def _fixed_point_irls(y, X, family_id, tol=1e-10, max_iter=200):
    """Independent oracle: textbook working-response IRLS iteration."""
    if family_id == "bernoulli-logistic":
        inv, dinv = expit, lambda e: expit(e) * (1.0 - expit(e))
        b = np.linalg.lstsq(X, np.log(np.clip(y, 0.05, 0.95) / (1 - np.clip(y, 0.05, 0.95))), rcond=None)[0]
    elif family_id == "poisson-exponential":
        inv, dinv = np.exp, np.exp
        b = np.linalg.lstsq(X, np.log(np.maximum(y, 0.1)), rcond=None)[0]
    else:
        raise ValueError(family_id)
    for _ in range(max_iter):
        eta = X @ b
        mu = inv(eta)
        w = np.maximum(dinv(eta), 1e-12)
        z = eta + (y - mu) / w
        Xw = X * w[:, None]
        b_new = np.linalg.solve(X.T @ Xw, Xw.T @ z)
        if np.abs(b_new - b).max() < tol:
            return b_new
        b = b_new
    return b


def test_bernoulli_intercept_only_closed_form():
    fit = qmle_fit(np.array([0.0, 1.0]), np.ones((2, 1)), "bernoulli-logistic")
    assert abs(fit.coefficients[0]) < 1e-12  # logit(1/2)
    assert fit.converged


def test_poisson_intercept_only_closed_form():
    fit = qmle_fit(np.array([1.0, 3.0]), np.ones((2, 1)), "poisson-exponential")
    assert fit.coefficients[0] == pytest.approx(np.log(2.0), abs=1e-10)


def test_binomial_intercept_only_matches_pooled_share():
    y = np.array([1.0, 4.0, 0.0])
    trials = np.array([2.0, 5.0, 3.0])
    fit = qmle_fit(y, np.ones((3, 1)), "binomial-logistic", trials=trials)
    assert expit(fit.coefficients[0]) == pytest.approx(y.sum() / trials.sum(), abs=1e-10)


@pytest.mark.parametrize("fam_id", ["bernoulli-logistic", "poisson-exponential"])
def test_matches_independent_irls_oracle(fam_id):
    rng = np.random.default_rng(12)
    n = 200
    X = np.column_stack([np.ones(n), rng.normal(size=n)])
    eta = 0.3 + 0.8 * X[:, 1]
    if fam_id == "bernoulli-logistic":
        y = (rng.random(n) < expit(eta)).astype(float)
    else:
        y = rng.poisson(np.exp(eta)).astype(float)
    fit = qmle_fit(y, X, fam_id)
    oracle = _fixed_point_irls(y, X, fam_id)
    assert np.abs(fit.coefficients - oracle).max() < 1e-10


def test_score_vanishes_at_optimum():
    rng = np.random.default_rng(5)
    n = 300
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
    y = (rng.random(n) < expit(X @ np.array([0.2, 0.7, -0.4]))).astype(float)
    fit = qmle_fit(y, X, "bernoulli-logistic")
    fam = get_family("bernoulli-logistic")
    score = X.T @ (y - fam.conditional_mean(X @ fit.coefficients))
    qll = fam.qll(y, X @ fit.coefficients)
    assert np.abs(score).max() <= 1e-8 * max(1.0, abs(qll))
    assert fit.score_norm <= 1e-8 * max(1.0, abs(qll))


def test_separation_detected():
    x = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    y = (x > 0).astype(float)
    X = np.column_stack([np.ones(6), x])
    with pytest.raises(SeparationError):
        qmle_fit(y, X, "bernoulli-logistic")


def test_no_convergence_when_iteration_budget_exhausted():
    rng = np.random.default_rng(8)
    n = 100
    X = np.column_stack([np.ones(n), rng.normal(size=n)])
    y = (rng.random(n) < expit(1.0 + X[:, 1])).astype(float)
    with pytest.raises(NoConvergenceError):
        qmle_fit(y, X, "bernoulli-logistic", max_iter=1)


def _bernoulli_dataset(n=600, seed=3, fractional=False):
    rng = np.random.default_rng(seed)
    G = 3
    X = rng.normal(size=(n, 2))
    arms = rng.integers(1, G + 1, n)
    eta = 0.2 * arms + X @ np.array([0.8, -0.5])
    p = expit(eta)
    y = p if fractional else (rng.random(n) < p).astype(float)
    return Dataset(group=arms, outcome=y, covariates=X,
                   covariate_names=("x1", "x2"), labels=(1, 2, 3))


@pytest.mark.parametrize("fam_id", ["bernoulli-logistic", "poisson-exponential"])
def test_nsra_mean_matching_within_arms(fam_id):
    rng = np.random.default_rng(17)
    n = 500
    X = rng.normal(size=(n, 2))
    arms = rng.integers(1, 4, n)
    if fam_id == "bernoulli-logistic":
        y = (rng.random(n) < expit(0.3 * arms + X[:, 0])).astype(float)
    else:
        y = rng.poisson(np.exp(0.2 * arms + 0.4 * X[:, 0])).astype(float)
    ds = Dataset(group=arms, outcome=y, covariates=X, covariate_names=("x1", "x2"),
                 labels=(1, 2, 3))
    res, _ = estimate_nsra(ds, fam_id)
    fam = get_family(fam_id)
    alpha, beta = res.coefficients["alpha"], res.coefficients["beta"]
    for g in range(1, 4):
        mask = ds.arm_mask(g)
        pred = fam.conditional_mean(alpha[g - 1] + X[mask] @ beta[g - 1])
        assert pred.mean() == pytest.approx(y[mask].mean(), abs=1e-8)


def test_nsra_binomial_mean_matching_with_trials():
    rng = np.random.default_rng(23)
    n = 400
    X = rng.normal(size=(n, 1))
    arms = rng.integers(1, 3, n)
    trials = rng.integers(1, 6, n).astype(float)
    p = expit(0.4 * arms + 0.6 * X[:, 0])
    y = rng.binomial(trials.astype(int), p).astype(float)
    ds = Dataset(group=arms, outcome=y, covariates=X, covariate_names=("x",),
                 labels=(1, 2), trials=trials)
    res, _ = estimate_nsra(ds, "binomial-logistic")
    fam = get_family("binomial-logistic")
    alpha, beta = res.coefficients["alpha"], res.coefficients["beta"]
    for g in (1, 2):
        mask = ds.arm_mask(g)
        pred = fam.conditional_mean(alpha[g - 1] + X[mask] @ beta[g - 1], trials[mask])
        assert pred.mean() == pytest.approx(y[mask].mean(), abs=1e-8)


def test_npra_per_arm_fitted_means_match():
    ds = _bernoulli_dataset()
    res, _ = estimate_npra(ds, "bernoulli-logistic")
    fam = get_family("bernoulli-logistic")
    gamma = res.coefficients["gamma"]
    beta = res.coefficients["beta_pooled"]
    for g in (1, 2, 3):
        mask = ds.arm_mask(g)
        fitted = fam.conditional_mean(gamma[g - 1] + ds.covariates[mask] @ beta)
        assert fitted.mean() == pytest.approx(ds.outcome[mask].mean(), abs=1e-8)


def test_intercept_only_qmle_recovers_arm_means():
    rng = np.random.default_rng(29)
    arms = rng.integers(1, 4, 200)
    y = (rng.random(200) < 0.2 + 0.1 * arms).astype(float)
    ds = Dataset(group=arms, outcome=y, covariates=np.empty((200, 0)), labels=(1, 2, 3))
    res, _ = estimate_nsra(ds, "bernoulli-logistic")
    ybar = np.array([y[arms == g].mean() for g in (1, 2, 3)])
    assert np.abs(res.mu_hat - ybar).max() < 1e-10


def test_gaussian_reduction_nsra_equals_sra():
    ds = simulated_dataset(500, seed=41)
    r_lin, _ = estimate_sra(ds)
    r_q, _ = estimate_nsra(ds, "gaussian-linear")
    assert np.abs(r_q.mu_hat - r_lin.mu_hat).max() < 1e-8
    assert np.abs(r_q.vcov - r_lin.vcov).max() < 1e-8


def test_gaussian_reduction_npra_equals_pra():
    ds = simulated_dataset(500, seed=43)
    r_lin, _ = estimate_pra(ds)
    r_q, _ = estimate_npra(ds, "gaussian-linear")
    assert np.abs(r_q.mu_hat - r_lin.mu_hat).max() < 1e-8
    assert np.abs(r_q.vcov - r_lin.vcov).max() < 1e-8


def test_range_respect():
    ds = _bernoulli_dataset(fractional=True)
    r1, _ = estimate_nsra(ds, "bernoulli-logistic")
    r2, _ = estimate_npra(ds, "bernoulli-logistic")
    for mu in (r1.mu_hat, r2.mu_hat):
        assert (mu > 0.0).all() and (mu < 1.0).all()

    rng = np.random.default_rng(31)
    arms = rng.integers(1, 4, 500)
    X = rng.normal(size=(500, 1))
    y = rng.poisson(np.exp(0.3 * arms + 0.2 * X[:, 0])).astype(float)
    ds3 = Dataset(group=arms, outcome=y, covariates=X, covariate_names=("x",),
                  labels=(1, 2, 3))
    r3, _ = estimate_nsra(ds3, "poisson-exponential")
    assert (r3.mu_hat > 0.0).all()


def test_nsra_error_names_the_arm():
    # arm 2 is perfectly separated on its covariate
    x = np.r_[np.linspace(-1, 1, 40), np.linspace(-1, 1, 40)]
    arms = np.r_[np.ones(40, int), np.full(40, 2)]
    rng = np.random.default_rng(2)
    y = np.r_[(rng.random(40) < 0.5).astype(float), (x[40:] > 0).astype(float)]
    ds = Dataset(group=arms, outcome=y, covariates=x.reshape(-1, 1),
                 covariate_names=("x",), labels=("a", "b"))
    with pytest.raises(SeparationError) as exc:
        estimate_nsra(ds, "bernoulli-logistic")
    assert exc.value.arm == "b"


def test_nsra_robust_vcov_close_to_influence_form():
    ds = _bernoulli_dataset(n=2000, seed=51)
    r_default, _ = estimate_nsra(ds, "bernoulli-logistic")
    r_robust, _ = estimate_nsra(ds, "bernoulli-logistic", robust_vcov=True)
    assert np.abs(r_robust.mu_hat - r_default.mu_hat).max() < 1e-12
    denom = np.abs(r_default.vcov).max()
    assert np.abs(r_robust.vcov - r_default.vcov).max() <= 0.2 * denom


def test_binomial_with_unit_trials_equals_bernoulli():
    rng = np.random.default_rng(61)
    n = 150
    X = np.column_stack([np.ones(n), rng.normal(size=n)])
    y = (rng.random(n) < expit(0.5 * X[:, 1])).astype(float)
    f_bern = qmle_fit(y, X, "bernoulli-logistic")
    f_binom = qmle_fit(y, X, "binomial-logistic", trials=np.ones(n))
    assert np.abs(f_bern.coefficients - f_binom.coefficients).max() < 1e-10


def test_nsra_repeat_call_bitwise_identical():
    ds = _bernoulli_dataset(n=400, seed=71)
    r1, d1 = estimate_nsra(ds, "bernoulli-logistic")
    r2, d2 = estimate_nsra(ds, "bernoulli-logistic")
    assert np.array_equal(r1.mu_hat, r2.mu_hat)
    assert np.array_equal(r1.vcov, r2.vcov)
    assert np.array_equal(d1.rows, d2.rows)


def test_influence_blocks_add_up():
    ds = _bernoulli_dataset()
    _, d1 = estimate_nsra(ds, "bernoulli-logistic")
    _, d2 = estimate_npra(ds, "bernoulli-logistic")
    assert np.array_equal(d1.blocks["H"] + d1.blocks["J"], d1.rows)
    assert np.array_equal(d2.blocks["H"] + d2.blocks["J"], d2.rows)
    assert d1.kind == "qmle-SRA"
    assert d2.kind == "qmle-NPRA"

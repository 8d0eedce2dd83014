import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pomeans import (
    Contrast,
    DegenerateSampleError,
    DimensionMismatchError,
    EstimatorResult,
    GradientNonFiniteError,
    NumericError,
    contrast_estimate,
    estimate_sm,
    psd_compare,
    validate_dataset,
    vcov_from_influence,
)


def _result(mu, vcov, estimator_id="SM"):
    G = len(mu)
    return EstimatorResult(
        estimator_id=estimator_id,
        mu_hat=np.asarray(mu, dtype=float),
        vcov=np.asarray(vcov, dtype=float),
        group_sizes=np.full(G, 10),
        rho_hat=np.full(G, 1.0 / G),
        labels=tuple(range(1, G + 1)),
    )


def test_all_zero_rows_give_zero_matrix():
    assert np.array_equal(vcov_from_influence(np.zeros((5, 2))), np.zeros((2, 2)))


def test_hand_computed_sm_diagonal():
    ds = validate_dataset({"group": [1, 1, 2, 2], "y": [0.0, 2.0, 1.0, 3.0]})
    _, dec = estimate_sm(ds)
    V = vcov_from_influence(dec)
    # within-arm variance (divisor N_g) is 1.0 in both arms; N_g = 2
    assert V[0, 0] == pytest.approx(0.5, rel=1e-12)
    assert V[1, 1] == pytest.approx(0.5, rel=1e-12)


def test_output_bitwise_symmetric():
    rng = np.random.default_rng(0)
    V = vcov_from_influence(rng.normal(size=(40, 3)))
    assert np.array_equal(V, V.T)


def test_degenerate_sample():
    with pytest.raises(DegenerateSampleError):
        vcov_from_influence(np.ones((1, 2)))


def test_vcov_always_psd_up_to_roundoff():
    rng = np.random.default_rng(1)
    for _ in range(20):
        V = vcov_from_influence(rng.normal(size=(30, 4)) * rng.uniform(0.1, 10))
        assert np.linalg.eigvalsh(V).min() >= -1e-10


def test_ate_contrast_example():
    res = _result([1.0, 3.0], np.eye(2) * 0.01)
    out = contrast_estimate(res, Contrast.ate())
    assert out.tau_hat == pytest.approx(2.0)
    assert out.se == pytest.approx(np.sqrt(0.02))


def test_did_weights():
    # arms ordered CB, CA, TB, TA: tau = (mu_TA - mu_TB) - (mu_CA - mu_CB)
    c = Contrast.did()
    assert np.array_equal(c.weights, [1.0, -1.0, -1.0, 1.0])
    res = _result([1.0, 2.0, 3.0, 7.0], np.eye(4) * 0.0)
    out = contrast_estimate(res, c)
    assert out.tau_hat == pytest.approx((7.0 - 3.0) - (2.0 - 1.0))


def test_ratio_delta_method_hand_value():
    res = _result([2.0, 4.0], np.diag([0.04, 0.16]))
    out = contrast_estimate(res, Contrast.ratio(numerator=2, denominator=1, G=2))
    # gradient (-mu2/mu1^2, 1/mu1) = (-1, 0.5): se^2 = 1*0.04 + 0.25*0.16
    assert out.tau_hat == pytest.approx(2.0)
    assert out.se == pytest.approx(np.sqrt(0.08), rel=1e-9)


def test_numeric_gradient_matches_analytic_for_linear_fn():
    res = _result([1.0, 2.0, 5.0], np.diag([0.1, 0.2, 0.3]))
    a = np.array([0.5, -1.0, 2.0])
    smooth = Contrast.smooth("lin", lambda mu: float(a @ mu))
    linear = Contrast.linear("lin", a)
    out_s = contrast_estimate(res, smooth)
    out_l = contrast_estimate(res, linear)
    assert out_s.tau_hat == pytest.approx(out_l.tau_hat, abs=1e-12)
    assert out_s.se == pytest.approx(out_l.se, rel=1e-8)


def test_dimension_mismatch_and_nonfinite_gradient():
    res = _result([1.0, 2.0], np.eye(2))
    with pytest.raises(DimensionMismatchError):
        contrast_estimate(res, Contrast.linear("bad", [1.0, 2.0, 3.0]))
    res0 = _result([0.0, 2.0], np.eye(2))
    with pytest.raises(GradientNonFiniteError):
        contrast_estimate(res0, Contrast.ratio(numerator=2, denominator=1, G=2))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 6))
def test_linear_contrast_se_squared_is_quadratic_form(seed, G):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(G + 2, G))
    V = A.T @ A / (G + 2)
    res = _result(rng.normal(size=G), V)
    a = rng.normal(size=G)
    out = contrast_estimate(res, Contrast.linear("c", a))
    assert out.se**2 == pytest.approx(float(a @ V @ a), abs=1e-12 * max(1.0, float(a @ V @ a)))


def test_psd_compare_equal_matrices():
    V = np.eye(3) * 0.5
    rep = psd_compare(V, V, label="equal")
    assert rep.is_psd
    assert rep.min_eigenvalue == pytest.approx(0.0, abs=1e-15)


def test_psd_compare_identity_gap():
    rep = psd_compare(2.0 * np.eye(3), np.eye(3), label="gap")
    assert rep.min_eigenvalue == pytest.approx(1.0)
    assert rep.max_eigenvalue == pytest.approx(1.0)
    assert rep.is_psd


def test_psd_compare_detects_negative_direction():
    rep = psd_compare(np.diag([1.0, 1.0]), np.diag([1.0, 2.0]), label="neg")
    assert not rep.is_psd
    assert rep.min_eigenvalue == pytest.approx(-1.0)


def test_psd_compare_rejects_asymmetric():
    M = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(NumericError):
        psd_compare(M, np.eye(2))


def test_estimator_result_validates_vcov():
    with pytest.raises(Exception):
        _result([1.0, 2.0], np.array([[1.0, 0.5], [0.0, 1.0]]))

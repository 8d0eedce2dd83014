import numpy as np
import pytest

from pomeans import FAMILIES, FamilySupportError, get_family


def test_registry_contents():
    assert set(FAMILIES) == {
        "gaussian-linear",
        "bernoulli-logistic",
        "binomial-logistic",
        "poisson-exponential",
    }


@pytest.mark.parametrize("fam_id", sorted(FAMILIES))
def test_mean_derivative_matches_central_differences(fam_id):
    fam = get_family(fam_id)
    z = np.linspace(-5.0, 5.0, 25)
    h = 1e-6
    numeric = (fam.mean(z + h) - fam.mean(z - h)) / (2.0 * h)
    assert np.abs(fam.mean_derivative(z) - numeric).max() < 1e-6 * max(
        1.0, np.abs(fam.mean_derivative(z)).max()
    )


@pytest.mark.parametrize("fam_id", sorted(FAMILIES))
def test_mean_strictly_increasing(fam_id):
    fam = get_family(fam_id)
    z = np.linspace(-5.0, 5.0, 25)
    assert (fam.mean_derivative(z) > 0).all()
    assert (np.diff(fam.mean(z)) > 0).all()


def test_support_checks():
    with pytest.raises(FamilySupportError):
        get_family("bernoulli-logistic").check_support(np.array([-0.1, 0.5]))
    with pytest.raises(FamilySupportError):
        get_family("poisson-exponential").check_support(np.array([-1.0]))
    with pytest.raises(FamilySupportError):
        get_family("binomial-logistic").check_support(np.array([1.0]), trials=None)
    with pytest.raises(FamilySupportError):
        get_family("binomial-logistic").check_support(
            np.array([3.0]), trials=np.array([2.0])
        )
    # fractional responses are inside the bernoulli support
    get_family("bernoulli-logistic").check_support(np.array([0.0, 0.25, 1.0]))


def test_binomial_conditional_mean_scales_with_trials():
    fam = get_family("binomial-logistic")
    eta = np.array([0.0, 1.0])
    trials = np.array([2.0, 10.0])
    m = fam.conditional_mean(eta, trials)
    assert m[0] == pytest.approx(1.0)  # 2 * sigmoid(0)
    assert m[1] == pytest.approx(10.0 / (1.0 + np.exp(-1.0)))


def test_unknown_family_rejected():
    with pytest.raises(FamilySupportError):
        get_family("negative-binomial")

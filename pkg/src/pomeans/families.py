"""Linear exponential family / canonical mean pairs.

Each family couples a quasi-log-likelihood with the mean function of its
canonical link, the pairing that keeps arm-mean estimates consistent no
matter how badly the conditional mean is misspecified:

=====================  ==========  ===========
outcome support        mean        quasi-LL
=====================  ==========  ===========
unrestricted           identity    Gaussian
[0, 1]                 logistic    Bernoulli
[0, B_i] counts        logistic    Binomial
nonnegative            exponential Poisson
=====================  ==========  ===========

With a canonical link the score of the quasi-LL is always
``X'(y - mean)``, which is what forces the mean-matching first-order
conditions the estimators rely on. The binomial family carries per-row
trial counts ``B_i``; the other families ignore ``trials``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .errors import FamilySupportError

_EPS = 1e-12


def _ones_like(eta, trials):
    return np.ones_like(eta) if trials is None else np.asarray(trials, dtype=np.float64)


@dataclass(frozen=True)
class Family:
    """One mean/quasi-log-likelihood pair.

    ``mean`` and ``mean_derivative`` are the scalar canonical-inverse-link
    and its derivative (the derivative is strictly positive everywhere).
    The ``conditional_mean`` / ``weights`` / ``qll`` methods operate on a
    linear index ``eta`` row-wise and apply per-row trial scaling where
    the family calls for it.
    """

    id: str
    uses_trials: bool = False

    # -- scalar canonical mean -------------------------------------------------
    def mean(self, z):
        raise NotImplementedError

    def mean_derivative(self, z):
        raise NotImplementedError

    # -- row-wise pieces used by the fitting loop ------------------------------
    def conditional_mean(self, eta, trials=None):
        return self.mean(eta)

    def mean_gradient_scale(self, eta, trials=None):
        """d(conditional mean)/d(eta) per row."""
        return self.mean_derivative(eta)

    def weights(self, eta, trials=None):
        """Expected-information weights for the Newton step."""
        return self.mean_gradient_scale(eta, trials)

    def qll(self, y, eta, trials=None) -> float:
        raise NotImplementedError

    def check_support(self, y, trials=None):
        raise NotImplementedError

    def start_eta(self, y, trials=None):
        """Link-transformed outcome, clamped away from the boundaries."""
        raise NotImplementedError


class GaussianFamily(Family):
    def __init__(self):
        super().__init__(id="gaussian-linear")

    def mean(self, z):
        return np.asarray(z, dtype=np.float64)

    def mean_derivative(self, z):
        return np.ones_like(np.asarray(z, dtype=np.float64))

    def qll(self, y, eta, trials=None):
        r = y - eta
        return -0.5 * float(r @ r)

    def check_support(self, y, trials=None):
        pass

    def start_eta(self, y, trials=None):
        return np.asarray(y, dtype=np.float64)


class BernoulliFamily(Family):
    """Bernoulli quasi-LL with logistic mean; fractional y in [0,1] allowed."""

    def __init__(self):
        super().__init__(id="bernoulli-logistic")

    def mean(self, z):
        return expit(z)

    def mean_derivative(self, z):
        p = expit(z)
        return p * (1.0 - p)

    def qll(self, y, eta, trials=None):
        p = np.clip(expit(eta), _EPS, 1.0 - _EPS)
        return float(y @ np.log(p) + (1.0 - y) @ np.log1p(-p))

    def check_support(self, y, trials=None):
        if (y < 0).any() or (y > 1).any():
            raise FamilySupportError(self.id, "y must lie in [0, 1]")

    def start_eta(self, y, trials=None):
        return logit(np.clip(y, 0.01, 0.99))


class BinomialFamily(Family):
    """Binomial quasi-LL with logistic mean and per-row trials B_i."""

    def __init__(self):
        super().__init__(id="binomial-logistic", uses_trials=True)

    def mean(self, z):
        return expit(z)

    def mean_derivative(self, z):
        p = expit(z)
        return p * (1.0 - p)

    def conditional_mean(self, eta, trials=None):
        return _ones_like(eta, trials) * expit(eta)

    def mean_gradient_scale(self, eta, trials=None):
        p = expit(eta)
        return _ones_like(eta, trials) * p * (1.0 - p)

    def qll(self, y, eta, trials=None):
        B = _ones_like(eta, trials)
        p = np.clip(expit(eta), _EPS, 1.0 - _EPS)
        return float(y @ np.log(p) + (B - y) @ np.log1p(-p))

    def check_support(self, y, trials=None):
        if trials is None:
            raise FamilySupportError(self.id, "per-row trials are required")
        if (y < 0).any() or (y > trials).any():
            raise FamilySupportError(self.id, "y must lie in [0, trials]")

    def start_eta(self, y, trials=None):
        B = _ones_like(y, trials)
        return logit(np.clip(y / B, 0.01, 0.99))


class PoissonFamily(Family):
    def __init__(self):
        super().__init__(id="poisson-exponential")

    def mean(self, z):
        return np.exp(z)

    def mean_derivative(self, z):
        return np.exp(z)

    def qll(self, y, eta, trials=None):
        return float(y @ eta - np.exp(eta).sum())

    def check_support(self, y, trials=None):
        if (y < 0).any():
            raise FamilySupportError(self.id, "y must be nonnegative")

    def start_eta(self, y, trials=None):
        return np.log(np.maximum(y, 0.01))


FAMILIES = {
    f.id: f
    for f in (GaussianFamily(), BernoulliFamily(), BinomialFamily(), PoissonFamily())
}


def get_family(family) -> Family:
    """Resolve a family id (or pass an instance through)."""
    if isinstance(family, Family):
        return family
    try:
        return FAMILIES[family]
    except KeyError:
        raise FamilySupportError(str(family), f"unknown family; choose from {sorted(FAMILIES)}")

"""Result containers shared by every estimator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DataError


@dataclass
class EstimatorResult:
    """Point estimates of the arm-mean vector plus their covariance.

    ``vcov`` estimates the covariance of ``mu_hat`` itself (the
    asymptotic variance already divided by N). ``coefficients`` is a
    mapping of named arrays whose keys depend on the estimator: per-arm
    intercepts/slopes for the separate fits, pooled slopes and arm
    offsets for the pooled fits.
    """

    estimator_id: str
    mu_hat: np.ndarray
    vcov: np.ndarray
    group_sizes: np.ndarray
    rho_hat: np.ndarray
    labels: tuple = ()
    family: str | None = None
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mu_hat = np.asarray(self.mu_hat, dtype=np.float64)
        self.vcov = np.asarray(self.vcov, dtype=np.float64)
        G = self.mu_hat.shape[0]
        if self.vcov.shape != (G, G):
            raise DataError("vcov shape does not match mu_hat length")
        scale = max(1.0, float(np.abs(self.vcov).max()))
        if np.abs(self.vcov - self.vcov.T).max() > 1e-10 * scale:
            raise DataError("vcov is not symmetric")
        if (np.diag(self.vcov) < -1e-12 * scale).any():
            raise DataError("vcov has a negative diagonal entry")
        if abs(float(np.sum(self.rho_hat)) - 1.0) > 1e-12:
            raise DataError("rho_hat does not sum to one")

    @property
    def n_arms(self) -> int:
        return self.mu_hat.shape[0]

    def se(self) -> np.ndarray:
        """Per-arm standard errors, sqrt of the vcov diagonal."""
        return np.sqrt(np.clip(np.diag(self.vcov), 0.0, None))


@dataclass
class InfluenceDecomposition:
    """Per-observation influence contributions and their named blocks.

    ``rows`` is the n x G matrix of estimated influence contributions:
    the summands whose scaled sum reproduces the estimator's first-order
    sampling error. ``blocks`` maps component names (L, Q, K, F, H, J)
    to n x G matrices that add up to ``rows`` exactly as stored.
    """

    kind: str
    rows: np.ndarray
    blocks: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def n_arms(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class Contrast:
    """A scalar target: either weights ``a`` (tau = a'mu) or a smooth map.

    Exactly one of ``weights`` / ``fn`` is set. ``gradient`` optionally
    supplies the analytic gradient of ``fn``; otherwise central
    differences are used at evaluation time.
    """

    name: str
    weights: np.ndarray | None = None
    fn: Callable | None = None
    gradient: Callable | None = None

    def __post_init__(self):
        if (self.weights is None) == (self.fn is None):
            raise DataError("a contrast needs exactly one of weights or fn")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if not np.isfinite(w).all():
                raise DataError(f"contrast {self.name!r} has non-finite weights")
            object.__setattr__(self, "weights", w)

    @property
    def is_linear(self) -> bool:
        return self.weights is not None

    @staticmethod
    def linear(name: str, weights) -> "Contrast":
        return Contrast(name=name, weights=np.asarray(weights, dtype=np.float64))

    @staticmethod
    def smooth(name: str, fn, gradient=None) -> "Contrast":
        return Contrast(name=name, fn=fn, gradient=gradient)

    @staticmethod
    def ate(G: int = 2, treated: int = 2, control: int = 1) -> "Contrast":
        """mu_treated - mu_control (arms are 1-based)."""
        w = np.zeros(G)
        w[treated - 1] = 1.0
        w[control - 1] = -1.0
        return Contrast.linear("ate", w)

    @staticmethod
    def did() -> "Contrast":
        """Difference in differences over four arms ordered CB, CA, TB, TA.

        tau = (mu_TA - mu_TB) - (mu_CA - mu_CB), i.e. weights (1, -1, -1, 1).
        """
        return Contrast.linear("did", np.array([1.0, -1.0, -1.0, 1.0]))

    @staticmethod
    def ratio(numerator: int = 2, denominator: int = 1, G: int = 2) -> "Contrast":
        """mu_numerator / mu_denominator with its analytic gradient."""
        i, j = numerator - 1, denominator - 1

        def fn(mu):
            return mu[i] / mu[j]

        def grad(mu):
            g = np.zeros(G)
            g[i] = 1.0 / mu[j]
            g[j] = -mu[i] / mu[j] ** 2
            return g

        return Contrast.smooth(f"ratio({numerator}/{denominator})", fn, grad)


@dataclass
class ContrastResult:
    tau_hat: float
    se: float
    contrast: Contrast
    source: str

    def __post_init__(self):
        if self.se < 0:
            raise DataError("standard error must be nonnegative")


@dataclass
class PsdReport:
    """Eigenvalue summary of a covariance difference matrix."""

    matrix_label: str
    min_eigenvalue: float
    max_eigenvalue: float
    tol: float = 1e-8

    @property
    def is_psd(self) -> bool:
        return self.min_eigenvalue >= -self.tol * max(1.0, self.max_eigenvalue)

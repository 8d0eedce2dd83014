"""Lower-bound mean willingness-to-pay from bid-response experiments.

With bids b_1 < ... < b_G (and b_0 = 0) randomly assigned and arm means
mu_g the population acceptance shares, tau = sum_g (b_g - b_{g-1}) mu_g
is a lower bound on mean WTP: a Riemann underestimate of the area below
the acceptance survival curve. Applied to subsample means this is the
classic acceptance-share lower bound with no monotonization imposed;
any other arm-mean estimator slots in unchanged since tau is linear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BidOrderViolationError, DimensionMismatchError
from .inference import contrast_estimate
from .results import Contrast, ContrastResult, EstimatorResult


@dataclass(frozen=True)
class WtpSpec:
    """Bid design plus the estimator choice used to report provenance."""

    bids: tuple
    estimator: str = "sm"
    covariates: tuple = ()

    def __post_init__(self):
        b = np.asarray(self.bids, dtype=np.float64)
        if b.size < 1:
            raise BidOrderViolationError("at least one bid is required")
        if (b <= 0).any() or (np.diff(b) <= 0).any():
            raise BidOrderViolationError()
        object.__setattr__(self, "bids", tuple(float(x) for x in b))


def wtp_weights(bids) -> np.ndarray:
    """Contrast weights a_g = b_g - b_{g-1} with b_0 = 0."""
    b = np.asarray(bids, dtype=np.float64)
    return np.diff(np.concatenate([[0.0], b]))


def wtp_lower_bound(res: EstimatorResult, spec: WtpSpec) -> ContrastResult:
    """tau_hat = sum (b_g - b_{g-1}) mu_hat_g with se from the vcov.

    Requires one arm per bid with arms ordered by ascending bid; when the
    result's arm labels are numeric they must equal the bids in order
    (no silent sorting — weight/arm misalignment would be an invisible
    error otherwise).
    """
    if res.n_arms != len(spec.bids):
        raise DimensionMismatchError(
            f"result has {res.n_arms} arms but the design has {len(spec.bids)} bids"
        )
    if res.labels:
        try:
            labels = [float(lab) for lab in res.labels]
        except (TypeError, ValueError):
            labels = None
        if labels is not None and not np.allclose(labels, spec.bids):
            raise BidOrderViolationError(
                "arm labels do not match the bids in ascending order"
            )
    contrast = Contrast.linear("wtp-lower-bound", wtp_weights(spec.bids))
    return contrast_estimate(res, contrast)

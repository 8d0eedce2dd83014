"""Exception hierarchy.

Two branches matter for scripting: ``DataError`` (bad input data, CLI exit
code 3) and ``NumericError`` (estimation failed on valid data, CLI exit
code 4). Every exception carries a short machine-parsable ``code``.
"""

from __future__ import annotations


class PomeansError(Exception):
    """Base class for all package errors."""

    code = "error"


class DataError(PomeansError):
    """Input data violates a contract (validation failure)."""

    code = "data-error"


class EmptyArmError(DataError):
    code = "empty-arm"

    def __init__(self, label):
        self.label = label
        super().__init__(f"arm {label!r} has no observations")


class NonFiniteError(DataError):
    code = "non-finite"

    def __init__(self, column):
        self.column = column
        super().__init__(f"non-finite value in column {column!r}")


class TrialsViolationError(DataError):
    code = "trials-violation"

    def __init__(self, msg="outcome outside [0, trials]"):
        super().__init__(msg)


class FamilySupportError(DataError):
    code = "family-support"

    def __init__(self, family_id, msg):
        self.family_id = family_id
        super().__init__(f"outcomes outside support of {family_id}: {msg}")


class BidOrderViolationError(DataError):
    code = "bid-order"

    def __init__(self, msg="bids must be positive and strictly increasing"):
        super().__init__(msg)


class DimensionMismatchError(DataError):
    code = "dimension-mismatch"


class NumericError(PomeansError):
    """Estimation failed numerically on otherwise valid data."""

    code = "numeric-error"


class RankDeficientError(NumericError):
    code = "rank-deficient"

    def __init__(self, column, rank=None, arm=None):
        self.column = column
        self.rank = rank
        self.arm = arm
        where = f" in arm {arm!r}" if arm is not None else ""
        super().__init__(
            f"design matrix{where} is rank deficient "
            f"(first dependent column index {column})"
        )


class ArmTooSmallError(NumericError):
    code = "arm-too-small"

    def __init__(self, label, size, needed):
        self.label = label
        self.size = size
        self.needed = needed
        super().__init__(
            f"arm {label!r} has {size} rows but the estimator needs {needed}"
        )


class NoConvergenceError(NumericError):
    code = "no-convergence"

    def __init__(self, score_norm, iterations, arm=None):
        self.score_norm = score_norm
        self.iterations = iterations
        self.arm = arm
        where = f" in arm {arm!r}" if arm is not None else ""
        super().__init__(
            f"quasi-likelihood fit{where} did not converge after "
            f"{iterations} iterations (score sup-norm {score_norm:.3e})"
        )


class SeparationError(NumericError):
    code = "separation"

    def __init__(self, max_coef, arm=None):
        self.max_coef = max_coef
        self.arm = arm
        where = f" in arm {arm!r}" if arm is not None else ""
        super().__init__(
            f"apparent separation{where}: coefficients diverging "
            f"(max |coef| = {max_coef:.2f}) with non-vanishing score"
        )


class DegenerateSampleError(NumericError):
    code = "degenerate-sample"


class GradientNonFiniteError(NumericError):
    code = "gradient-non-finite"


class EstimatorFailedError(NumericError):
    """Raised by the simulation harness when too many replications fail."""

    code = "estimator-failed"

    def __init__(self, failures, reps):
        self.failures = failures
        self.reps = reps
        sample = "; ".join(
            f"rep {r} {name}: {msg}" for r, name, msg in failures[:5]
        )
        super().__init__(
            f"{len(failures)} of {reps} replications failed (>1%): {sample}"
        )


class UnknownModelError(PomeansError):
    code = "unknown-model"

    def __init__(self, model):
        super().__init__(f"unknown population model {model!r}")

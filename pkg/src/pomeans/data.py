"""Core data model: validated multi-arm experiment datasets.

A :class:`Dataset` holds one row per unit with an arm assignment, an
observed outcome, optional binomial trial counts, and a (possibly empty)
covariate matrix. Arm labels may be anything hashable (integers, strings,
dollar bid amounts); internally arms are contiguous indices ``1..G`` with
the original labels kept alongside, in first-appearance order unless an
explicit order is supplied.

All arrays are frozen after construction, so a Dataset can be shared
freely across threads. Everything in this module is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import (
    DataError,
    EmptyArmError,
    NonFiniteError,
    TrialsViolationError,
)

GROUP_COL = "group"
OUTCOME_COL = "y"
TRIALS_COL = "trials"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Immutable rows of (arm index, outcome, optional trials, covariates).

    Attributes:
        group: length-n array of arm indices in ``1..G``.
        outcome: length-n float array of observed outcomes.
        covariates: ``n x K`` float matrix (``K`` may be zero).
        covariate_names: K column labels.
        labels: the original arm labels, position ``g-1`` holds arm g's label.
        trials: optional length-n positive integer array of binomial trials.
    """

    group: np.ndarray
    outcome: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple = ()
    labels: tuple = ()
    trials: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "group", _frozen(np.asarray(self.group, dtype=np.int64)))
        object.__setattr__(self, "outcome", _frozen(np.asarray(self.outcome, dtype=np.float64)))
        cov = np.asarray(self.covariates, dtype=np.float64)
        if cov.ndim == 1:
            cov = cov.reshape(-1, 1)
        object.__setattr__(self, "covariates", _frozen(cov))
        if self.trials is not None:
            object.__setattr__(self, "trials", _frozen(np.asarray(self.trials, dtype=np.float64)))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(1, int(self.group.max(initial=0)) + 1)))
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        self._check()

    def _check(self):
        n = self.group.shape[0]
        G = len(self.labels)
        if n == 0:
            raise DataError("dataset has no rows")
        if self.outcome.shape != (n,):
            raise DataError("outcome length does not match group length")
        if self.covariates.shape[0] != n:
            raise DataError("covariate rows do not match group length")
        if len(self.covariate_names) != self.covariates.shape[1]:
            raise DataError("covariate_names length does not match covariate columns")
        if self.group.min() < 1 or self.group.max() > G:
            raise DataError("group indices must lie in 1..G")
        counts = np.bincount(self.group, minlength=G + 1)[1:]
        for g, c in enumerate(counts, start=1):
            if c == 0:
                raise EmptyArmError(self.labels[g - 1])
        if not np.isfinite(self.outcome).all():
            raise NonFiniteError(OUTCOME_COL)
        if self.covariates.size and not np.isfinite(self.covariates).all():
            bad = np.where(~np.isfinite(self.covariates).all(axis=0))[0][0]
            raise NonFiniteError(self.covariate_names[bad])
        if self.trials is not None:
            if self.trials.shape != (n,):
                raise DataError("trials length does not match group length")
            if not np.isfinite(self.trials).all():
                raise NonFiniteError(TRIALS_COL)
            if (self.trials < 1).any() or (self.trials != np.round(self.trials)).any():
                raise TrialsViolationError("trials must be positive integers")
            if (self.outcome < 0).any() or (self.outcome > self.trials).any():
                raise TrialsViolationError()

    @property
    def n(self) -> int:
        return self.group.shape[0]

    @property
    def n_arms(self) -> int:
        return len(self.labels)

    @property
    def n_covariates(self) -> int:
        return self.covariates.shape[1]

    @property
    def group_sizes(self) -> np.ndarray:
        """N_g for g = 1..G; every entry is >= 1 by construction."""
        return np.bincount(self.group, minlength=self.n_arms + 1)[1:]

    @property
    def rho_hat(self) -> np.ndarray:
        """Sample assignment shares N_g / N."""
        return self.group_sizes / self.n

    def indicators(self) -> np.ndarray:
        """n x G one-hot arm indicator matrix (each row sums to one)."""
        W = np.zeros((self.n, self.n_arms))
        W[np.arange(self.n), self.group - 1] = 1.0
        return W

    def arm_mask(self, g: int) -> np.ndarray:
        return self.group == g


def validate_dataset(
    raw,
    group_col: str = GROUP_COL,
    outcome_col: str = OUTCOME_COL,
    trials_col: str | None = None,
    covariates: list[str] | None = None,
    arm_order: list | None = None,
) -> Dataset:
    """Validate a table of rows and return a :class:`Dataset`.

    ``raw`` is a pandas DataFrame (or anything ``pd.DataFrame`` accepts,
    such as a dict of columns). The reserved column names are ``group``,
    ``y`` and ``trials``; every other column is treated as a covariate
    unless an explicit ``covariates`` list is given.

    Arm labels are mapped to contiguous indices ``1..G`` preserving
    first-appearance order, unless ``arm_order`` supplies the order
    explicitly, in which case every listed label must actually occur
    (otherwise :class:`EmptyArmError`).
    """
    df = raw if isinstance(raw, pd.DataFrame) else pd.DataFrame(raw)
    for col in (group_col, outcome_col):
        if col not in df.columns:
            raise DataError(f"missing required column {col!r}")
    if trials_col is None and TRIALS_COL in df.columns:
        trials_col = TRIALS_COL
    if covariates is None:
        reserved = {group_col, outcome_col, trials_col}
        covariates = [c for c in df.columns if c not in reserved]
    else:
        for c in covariates:
            if c not in df.columns:
                raise DataError(f"covariate column {c!r} not found")

    raw_labels = df[group_col].to_numpy()
    if arm_order is not None:
        labels = list(arm_order)
    else:
        labels = list(pd.unique(df[group_col]))
    index_of = {lab: g for g, lab in enumerate(labels, start=1)}
    try:
        group = np.array([index_of[v] for v in raw_labels], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"arm label {exc.args[0]!r} not in the declared arm order")
    present = set(np.unique(group))
    for g, lab in enumerate(labels, start=1):
        if g not in present:
            raise EmptyArmError(lab)

    outcome = pd.to_numeric(df[outcome_col], errors="coerce").to_numpy(dtype=np.float64)
    if np.isnan(outcome).any():
        raise NonFiniteError(outcome_col)

    cov_arrays = []
    for c in covariates:
        col = pd.to_numeric(df[c], errors="coerce").to_numpy(dtype=np.float64)
        if np.isnan(col).any():
            raise NonFiniteError(c)
        cov_arrays.append(col)
    X = np.column_stack(cov_arrays) if cov_arrays else np.empty((len(df), 0))

    trials = None
    if trials_col is not None and trials_col in df.columns:
        trials = pd.to_numeric(df[trials_col], errors="coerce").to_numpy(dtype=np.float64)
        if np.isnan(trials).any():
            raise NonFiniteError(trials_col)

    return Dataset(
        group=group,
        outcome=outcome,
        covariates=X,
        covariate_names=tuple(covariates),
        labels=tuple(labels),
        trials=trials,
    )


def demean_covariates(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Center covariates at the full-sample mean.

    Returns ``(centered, xbar)`` where ``centered`` has zero column means
    (to roundoff) and ``xbar`` is the length-K sample mean vector. The
    full-sample mean is the sample analog of the population covariate
    mean; using it everywhere is what lets sampling error in the mean
    enter the estimators' variances correctly.
    """
    xbar = ds.covariates.mean(axis=0) if ds.n_covariates else np.empty(0)
    return ds.covariates - xbar, xbar

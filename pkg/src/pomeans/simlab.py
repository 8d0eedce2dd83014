"""Monte Carlo laboratory.

Builds large synthetic populations from three data-generating processes
(continuous/linear, fractional, and nonnegative count-like outcomes,
each in a mildly-predictive and a highly-predictive covariate regime),
samples experiments from them without replacement, assigns arms by
partitioning the unit interval, and summarizes replicated estimation as
Bias/Sd tables.

Determinism: every random draw flows through a counter-based Philox
generator keyed by ``(seed, purpose, index)`` so that replications are
independent substreams and a rerun with the same seed is bitwise
identical regardless of execution order.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .data import Dataset
from .errors import EstimatorFailedError, PomeansError, UnknownModelError
from .families import get_family
from .linear import estimate_pra, estimate_sm, estimate_sra
from .qmle import estimate_npra, estimate_nsra

POP1 = "pop1-linear"
POP2 = "pop2-fractional"
POP3 = "pop3-poisson"

_MODEL_ALIASES = {"pop1": POP1, "pop2": POP2, "pop3": POP3, POP1: POP1, POP2: POP2, POP3: POP3}

# Purpose tags for substream derivation (arbitrary fixed constants).
_TAG_COVARIATES = 9001
_TAG_ERRORS = 9002
_TAG_COUNTS = 9100  # + arm index
_TAG_REPLICATION = 1  # + replication index in the trailing slot

_COEFFS = {
    (POP1, "low"): ((0.0, 0.2, 0.1, 0.1), (1.0, 1.4, -1.0, -1.0), (2.0, -0.01, 0.1, 0.5)),
    (POP1, "high"): ((0.0, 1.0, 0.2, -0.3), (1.0, 2.5, 0.0, -0.3), (2.0, 1.1, -1.0, 0.1)),
    (POP2, "low"): (
        (-3.0, 0.6, 0.1, 0.0, 0.1),
        (0.0, 1.9, 0.0, -0.6, 0.1),
        (-2.5, 0.9, 0.1, -0.05, -0.5),
    ),
    (POP2, "high"): (
        (-1.0, 1.8, -0.5, 0.0, 0.4),
        (0.0, 2.0, 0.0, -0.05, 0.04),
        (0.3, 1.0, 0.6, -0.06, -0.2),
    ),
    (POP3, "low"): ((-1.0, 0.5, 1.0, 0.3), (0.0, 0.7, 0.0, 0.1), (0.0, 0.6, 1.0, 0.1)),
    (POP3, "high"): ((1.0, 0.05, 1.4, 0.3), (0.9, 0.4, 0.0, 0.01), (0.0, 0.4, 1.4, -0.1)),
}


@dataclass(frozen=True)
class PopulationModel:
    """One of the three DGPs with a coefficient regime and arm shares."""

    id: str
    regime: str
    gamma: tuple
    rho: tuple = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

    def __post_init__(self):
        if self.id not in (POP1, POP2, POP3):
            raise UnknownModelError(self.id)
        rho = np.asarray(self.rho, dtype=np.float64)
        if (rho <= 0).any() or abs(rho.sum() - 1.0) > 1e-12:
            raise PomeansError("rho must be positive and sum to one")
        want = 5 if self.id == POP2 else 4
        for g in self.gamma:
            if len(g) != want:
                raise PomeansError(f"{self.id} expects {want} coefficients per arm")


def builtin_parameterizations() -> dict:
    """The six (model x regime) coefficient sets, keyed by (id, regime)."""
    return {key: PopulationModel(id=key[0], regime=key[1], gamma=g) for key, g in _COEFFS.items()}


def get_model(model: str, regime: str) -> PopulationModel:
    try:
        model_id = _MODEL_ALIASES[model]
    except KeyError:
        raise UnknownModelError(model)
    return builtin_parameterizations()[(model_id, regime)]


@dataclass
class Population:
    """A finite synthetic population with all three potential outcomes."""

    model_id: str
    regime: str
    size: int
    potential_outcomes: np.ndarray  # size x 3
    covariates: np.ndarray  # size x 2 (continuous, binary)
    true_means: np.ndarray  # column means of the potential outcomes
    rho: np.ndarray
    r_squared: np.ndarray  # per-arm in-population linear R^2, informational
    seed: int


def _rng(*key) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


def _design_terms(model_id: str, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    if model_id == POP2:
        return np.column_stack([np.ones_like(x1), x1, x2, x1 * x1, x1 * x2])
    return np.column_stack([np.ones_like(x1), x1, x2, x1 * x2])


def generate_population(model: PopulationModel, size: int = 1_000_000, seed: int = 0) -> Population:
    """Draw one population of the given size from the model.

    Covariates: x1 = K1 + V and x2 = 1[K2 + V/2 > 0] with K1, K2 normal
    with standard deviation 2 and V standard normal. Latent errors share
    a common component: R(1) is standard normal,
    R(2) = c [R(1) + V1] with c = 3/sqrt(2) for the linear model and
    1/sqrt(2) otherwise, and R(3) = 1/sqrt(2) [R(1) + V2]. Outcomes are
    the linear index plus error, the normal cdf of it, or an
    exp(R/8)-damped Poisson draw with exponential mean, respectively.
    """
    if size < 1:
        raise PomeansError("population size must be at least 1")
    rng_x = _rng(seed, _TAG_COVARIATES)
    k1 = rng_x.normal(0.0, 2.0, size)
    k2 = rng_x.normal(0.0, 2.0, size)
    v = rng_x.normal(0.0, 1.0, size)
    x1 = k1 + v
    x2 = (k2 + v / 2.0 > 0.0).astype(np.float64)

    rng_e = _rng(seed, _TAG_ERRORS)
    r1 = rng_e.normal(0.0, 1.0, size)
    v1 = rng_e.normal(0.0, 1.0, size)
    v2 = rng_e.normal(0.0, 1.0, size)
    # Second-arm error scale: 3/sqrt(2) for the linear model; 1/sqrt(2) for
    # the fractional AND the count model (the count model's published true
    # means and R^2 are only consistent with the smaller scale).
    scale2 = 3.0 / np.sqrt(2.0) if model.id == POP1 else 1.0 / np.sqrt(2.0)
    errors = np.column_stack([r1, scale2 * (r1 + v1), (r1 + v2) / np.sqrt(2.0)])

    Z = _design_terms(model.id, x1, x2)
    gamma = np.asarray(model.gamma, dtype=np.float64)
    index = Z @ gamma.T  # size x 3

    if model.id == POP1:
        Y = index + errors
    elif model.id == POP2:
        Y = ndtr(index + errors)
    else:
        Y = np.empty((size, 3))
        for g in range(3):
            rng_c = _rng(seed, _TAG_COUNTS + g)
            lam = np.exp(index[:, g])
            Y[:, g] = np.exp(errors[:, g] / 8.0) * rng_c.poisson(lam)

    X = np.column_stack([x1, x2])
    r2 = np.empty(3)
    D = np.column_stack([np.ones(size), X])
    coef, *_ = np.linalg.lstsq(D, Y, rcond=None)
    for g in range(3):
        res = Y[:, g] - D @ coef[:, g]
        r2[g] = 1.0 - res.var() / Y[:, g].var()

    return Population(
        model_id=model.id,
        regime=model.regime,
        size=size,
        potential_outcomes=Y,
        covariates=X,
        true_means=Y.mean(axis=0),
        rho=np.asarray(model.rho, dtype=np.float64),
        r_squared=r2,
        seed=seed,
    )


def arm_from_uniform(u, rho) -> np.ndarray:
    """Map uniform draws to arms via the unit-interval partition.

    Cell g is the half-open interval [sum_{h<g} rho_h, sum_{h<=g} rho_h),
    so a draw landing exactly on a boundary belongs to the cell on the
    right. Returns 1-based arm indices.
    """
    edges = np.cumsum(np.asarray(rho, dtype=np.float64))
    edges[-1] = np.inf  # guard against cumsum rounding below 1
    return np.searchsorted(edges, np.atleast_1d(np.asarray(u, dtype=np.float64)), side="right") + 1


def assign_treatments(n: int, rho, seed=None, rng=None) -> np.ndarray:
    """Draw n arm assignments: one uniform per row, then the cell index."""
    if rng is None:
        rng = _rng(seed if seed is not None else 0, 7)
    return arm_from_uniform(rng.random(n), rho)


def sample_without_replacement(rng: np.random.Generator, pop_size: int, n: int) -> np.ndarray:
    """Partial Fisher-Yates over an index array, tracked sparsely.

    Performs the first n steps of the classic shuffle of 0..pop_size-1,
    storing only displaced entries, so the cost is O(n) regardless of
    the population size.
    """
    js = rng.integers(np.arange(n), pop_size)
    state = {}
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        j = int(js[i])
        out[i] = state.get(j, j)
        state[j] = state.get(i, i)
    return out


ESTIMATOR_IDS = ("sm", "pra", "sra", "npra", "nsra")

_DEFAULT_FAMILY = {POP1: "gaussian-linear", POP2: "bernoulli-logistic", POP3: "poisson-exponential"}


def default_family(model_id: str) -> str:
    return _DEFAULT_FAMILY[_MODEL_ALIASES[model_id]]


def _run_one(name: str, ds: Dataset, family):
    if name == "sm":
        return estimate_sm(ds)
    if name == "pra":
        return estimate_pra(ds)
    if name == "sra":
        return estimate_sra(ds)
    if name == "nsra":
        return estimate_nsra(ds, family)
    if name == "npra":
        return estimate_npra(ds, family)
    raise PomeansError(f"unknown estimator {name!r}")


@dataclass
class SimulationSummary:
    """Bias/Sd summary of replicated estimation on one population."""

    model_id: str
    regime: str
    n: int
    reps: int
    seed: int
    estimators: tuple
    family: str | None
    true_means: np.ndarray
    bias: dict = field(default_factory=dict)
    sd: dict = field(default_factory=dict)
    median_se: dict = field(default_factory=dict)
    n_used: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def to_csv_text(self) -> str:
        G = len(self.true_means)
        cols = ",".join(f"mu_{g + 1}" for g in range(G))
        buf = io.StringIO()
        buf.write(f"model,regime,n,reps,seed,estimator,stat,{cols}\n")
        prefix = f"{self.model_id},{self.regime},{self.n},{self.reps},{self.seed}"
        for name in self.estimators:
            for stat, table in (("bias", self.bias), ("sd", self.sd)):
                vals = table[name]
                cells = ",".join("NA" if not np.isfinite(v) else repr(float(v)) for v in vals)
                buf.write(f"{prefix},{name.upper()},{stat},{cells}\n")
        return buf.getvalue()

    def to_text(self) -> str:
        G = len(self.true_means)
        header = (
            f"{self.model_id} ({self.regime} R2)  N={self.n}  reps={self.reps}  seed={self.seed}\n"
            f"true means: {'  '.join(f'{m:.4f}' for m in self.true_means)}\n"
        )
        lines = [header]
        head = f"{'estimator':<10}{'stat':<6}" + "".join(f"{f'mu_{g + 1}':>12}" for g in range(G))
        lines.append(head)
        for name in self.estimators:
            for stat, table in (("Bias", self.bias), ("Sd", self.sd)):
                vals = table[name]
                cells = "".join(
                    f"{'NA':>12}" if not np.isfinite(v) else f"{v:>12.4f}" for v in vals
                )
                label = name.upper() if stat == "Bias" else ""
                lines.append(f"{label:<10}{stat:<6}{cells}")
        if self.failures:
            lines.append(f"failed replications: {len(self.failures)}")
        return "\n".join(lines) + "\n"


def run_replications(
    pop: Population,
    N: int,
    reps: int,
    estimators,
    seed: int = 0,
    family=None,
) -> SimulationSummary:
    """Replicate sample -> assign -> reveal -> estimate and summarize.

    Each replication draws N rows without replacement from the
    population, assigns arms independently, reveals the corresponding
    potential outcome, and runs every requested estimator. Reported per
    estimator and arm: Bias (mean of mu_hat - mu_true) and Sd (standard
    deviation of mu_hat across replications, divisor reps - 1; NA when
    reps == 1). A replication where an estimator raises is skipped for
    that estimator and counted; more than 1% failures aborts the run.
    """
    if N > pop.size:
        raise PomeansError("N cannot exceed the population size")
    if reps < 1:
        raise PomeansError("reps must be at least 1")
    names = tuple(e.strip().lower() for e in estimators)
    for name in names:
        if name not in ESTIMATOR_IDS:
            raise PomeansError(f"unknown estimator {name!r}")
    fam = None
    if any(n in ("nsra", "npra") for n in names):
        fam = get_family(family if family is not None else default_family(pop.model_id))

    G = pop.true_means.shape[0]
    mu_store = {n: np.full((reps, G), np.nan) for n in names}
    se_store = {n: np.full((reps, G), np.nan) for n in names}
    failures = []

    for rep in range(reps):
        rng = _rng(seed, _TAG_REPLICATION, rep)
        idx = sample_without_replacement(rng, pop.size, N)
        arms = arm_from_uniform(rng.random(N), pop.rho)
        y = pop.potential_outcomes[idx, arms - 1]
        if pop.model_id == POP2:
            y = np.clip(y, 0.0, 1.0)  # guard cdf roundoff at the boundaries
        ds = Dataset(
            group=arms,
            outcome=y,
            covariates=pop.covariates[idx],
            covariate_names=("x1", "x2"),
            labels=(1, 2, 3),
        )
        for name in names:
            try:
                res, _ = _run_one(name, ds, fam)
            except PomeansError as exc:
                failures.append((rep, name, str(exc)))
                continue
            mu_store[name][rep] = res.mu_hat
            se_store[name][rep] = res.se()

    per_estimator_fail = {n: sum(1 for _, e, _ in failures if e == n) for n in names}
    if any(c > 0.01 * reps for c in per_estimator_fail.values()):
        raise EstimatorFailedError(failures, reps)

    summary = SimulationSummary(
        model_id=pop.model_id,
        regime=pop.regime,
        n=N,
        reps=reps,
        seed=seed,
        estimators=names,
        family=fam.id if fam is not None else None,
        true_means=pop.true_means.copy(),
        failures=failures,
    )
    for name in names:
        ok = ~np.isnan(mu_store[name][:, 0])
        mu = mu_store[name][ok]
        summary.n_used[name] = int(ok.sum())
        summary.bias[name] = mu.mean(axis=0) - pop.true_means
        summary.sd[name] = mu.std(axis=0, ddof=1) if ok.sum() > 1 else np.full(G, np.nan)
        summary.median_se[name] = np.median(se_store[name][ok], axis=0)
    return summary

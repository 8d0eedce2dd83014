"""Shared fixtures: synthetic datasets used across test modules."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from pomeans import Dataset

# California oil-spill shaped fixture: five tax amounts as arm labels.
# Group sizes are the per-bid interview counts; yes-counts are
# reverse-engineered as round(share * N_g) from the published per-bid
# acceptance shares, after which the shares recompute exactly.
OIL_BIDS = (5.0, 25.0, 65.0, 120.0, 220.0)
OIL_SIZES = (219, 216, 241, 181, 228)
OIL_YES = (151, 123, 117, 73, 66)
OIL_SHARES = (0.6894, 0.5694, 0.4855, 0.4033, 0.2895)  # published, 4 dp


def oil_spill_frame(covariates: bool = False, seed: int = 20250214) -> pd.DataFrame:
    """Synthetic bid-vote table with the published group sizes and shares.

    Covariates, when requested, are synthetic stand-ins (the real survey
    covariates are proprietary): a log-income-like continuous column and
    an attitude-like binary column, drawn independently of the votes.
    """
    groups, votes = [], []
    for bid, n_g, yes in zip(OIL_BIDS, OIL_SIZES, OIL_YES):
        groups.extend([bid] * n_g)
        votes.extend([1.0] * yes + [0.0] * (n_g - yes))
    df = pd.DataFrame({"group": groups, "y": votes})
    if covariates:
        rng = np.random.default_rng(seed)
        n = len(df)
        df["linc"] = rng.normal(10.0, 0.8, n)
        df["envist"] = (rng.random(n) < 0.35).astype(float)
    return df


def toy_three_rows() -> pd.DataFrame:
    return pd.DataFrame({"group": [1, 1, 2], "y": [2.0, 4.0, 6.0]})


def simulated_dataset(
    n: int,
    G: int = 3,
    K: int = 2,
    seed: int = 0,
    rho=None,
    beta_scale: float = 0.5,
    err_sd: float = 1.0,
    equal_slopes: bool = False,
) -> Dataset:
    """Random-assignment linear DGP for invariant and property tests."""
    rng = np.random.default_rng(seed)
    rho = np.full(G, 1.0 / G) if rho is None else np.asarray(rho, dtype=float)
    X = rng.normal(size=(n, K))
    beta = rng.normal(size=(G, K)) * beta_scale
    if equal_slopes:
        beta = np.broadcast_to(beta[0], (G, K)).copy()
    alpha = rng.normal(size=G)
    arms = np.searchsorted(np.cumsum(rho), rng.random(n), side="right") + 1
    arms = np.minimum(arms, G)
    y = alpha[arms - 1] + np.einsum("ij,ij->i", X, beta[arms - 1]) + rng.normal(size=n) * err_sd
    return Dataset(
        group=arms,
        outcome=y,
        covariates=X,
        covariate_names=tuple(f"x{j + 1}" for j in range(K)),
        labels=tuple(range(1, G + 1)),
    )


@pytest.fixture(scope="session")
def oil_frame_plain():
    return oil_spill_frame(covariates=False)


@pytest.fixture(scope="session")
def oil_frame_covariates():
    return oil_spill_frame(covariates=True)

"""Least-squares kernel.

A single OLS routine backed by a column-pivoted QR decomposition (never
the normal equations), with explicit rank detection that names the first
linearly dependent column in pivot order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import RankDeficientError


@dataclass
class OlsFit:
    """Coefficients and residuals of one least-squares fit.

    ``xtx_inverse`` is (X'X)^{-1} reconstructed from the R factor; it is
    what the covariance machinery downstream needs, computed without
    ever forming X'X.
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    design_rank: int
    xtx_inverse: np.ndarray


def ols(y: np.ndarray, X: np.ndarray) -> OlsFit:
    """Least squares of ``y`` on the columns of ``X``.

    Requires at least as many rows as columns. Raises
    :class:`RankDeficientError` naming the offending column when the
    numerical rank of ``X`` falls short of its column count.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    m, p = X.shape
    if m < p:
        raise RankDeficientError(column=p - 1, rank=m)

    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(m, p) * np.finfo(np.float64).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < p:
        # piv orders columns by decreasing residual norm; the column
        # selected at step `rank` is the first dependent one.
        raise RankDeficientError(column=int(piv[rank]), rank=rank)

    z = scipy.linalg.solve_triangular(R, Q.T @ y, lower=False)
    coef = np.empty(p)
    coef[piv] = z

    r_inv = scipy.linalg.solve_triangular(R, np.eye(p), lower=False)
    xtx_inv = np.empty((p, p))
    xtx_inv[np.ix_(piv, piv)] = r_inv @ r_inv.T

    return OlsFit(
        coefficients=coef,
        residuals=y - X @ coef,
        design_rank=rank,
        xtx_inverse=xtx_inv,
    )

# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

""" Comparison metrics for the effattention library

Wasserstein-1 between prediction vectors and between attention rows, RMSE, MSE, the coefficient of determination and
the two normalised L2 distances. Matrix-pair metrics accept a single pair of 2-D matrices or a stacked batch of pairs
(3-D arrays) and average over the batch in index order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.stats import wasserstein_distance

from effattention.Exceptions import (
    DegenerateException,
    DimensionMismatchException,
    InvalidDistributionException,
    NonFiniteValueException,
)

logger = logging.getLogger(__name__)

PREDICTION_SLACK = 1e-12
ROW_NEGATIVITY_SLACK = 1e-9
ROW_MASS_SLACK = 1e-6
MIN_VARIANCE = 1e-15


@dataclass(frozen=True)
class MetricsReport:
    """Every prediction-vector metric for one pair of prediction vectors"""

    wasserstein: float
    rmse: float
    mse: float
    r2: Optional[float]
    l2_rel: Optional[float]
    l2_scaled: float
    n_samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "wasserstein": self.wasserstein,
            "rmse": self.rmse,
            "mse": self.mse,
            "r2": self.r2,
            "l2_rel": self.l2_rel,
            "l2_scaled": self.l2_scaled,
            "n_samples": self.n_samples,
        }


def as_predictions(p: Any, name: str = "predictions") -> NDArray[np.float64]:
    """Validate a prediction vector: 1-D, non-empty, finite, every entry in [0, 1]

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        InvalidDistributionException
    """
    out = np.array(p, dtype=np.float64, copy=True)
    if out.ndim != 1 or out.shape[0] == 0:
        raise DimensionMismatchException(f"{name} must be a non-empty 1-D vector, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise NonFiniteValueException(f"{name} contains NaN or Inf")
    if out.min() < -PREDICTION_SLACK or out.max() > 1.0 + PREDICTION_SLACK:
        raise InvalidDistributionException(f"{name} has values outside [0, 1]")
    return out


def _prediction_pair(p: Any, q: Any) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    p = as_predictions(p, "p")
    q = as_predictions(q, "q")
    if p.shape != q.shape:
        message = f"Prediction vectors have different lengths {p.shape[0]:d} and {q.shape[0]:d}"
        logger.error(message)
        raise DimensionMismatchException(message)
    return p, q


def _matrix_batch(a: Any, b: Any) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    # A single pair becomes a batch of one
    a = np.array(a, dtype=np.float64, copy=True)
    b = np.array(b, dtype=np.float64, copy=True)
    if a.shape != b.shape:
        message = f"Matrices have different shapes {a.shape} and {b.shape}"
        logger.error(message)
        raise DimensionMismatchException(message)
    if a.ndim == 2:
        a, b = a[np.newaxis], b[np.newaxis]
    if a.ndim != 3 or a.size == 0:
        raise DimensionMismatchException(f"Expected a non-empty matrix or batch of matrices, got shape {a.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NonFiniteValueException("Matrices contain NaN or Inf")
    return a, b


def wasserstein1_predictions(p: Any, q: Any) -> float:
    """Wasserstein-1 distance between the empirical measures of two equal-length prediction vectors

    For equal sample sizes this equals (1/n) sum_i |sort(p)_i - sort(q)_i|.

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        InvalidDistributionException
    """
    p, q = _prediction_pair(p, q)
    return float(wasserstein_distance(p, q))


def wasserstein1_rows(p_row: Any, q_row: Any, check: bool = True) -> float:
    """Wasserstein-1 distance between two distributions over positions 0..d_s-1 with ground metric |i - j|

    Computed as sum_{k < d_s-1} |CDF_p(k) - CDF_q(k)|. With check disabled the same formula is applied to signed rows
    of equal mass.

    Args:
        p_row (array-like): First distribution
        q_row (array-like): Second distribution
        check (boolean): Require nonnegative rows (within 1e-9) with masses within 1e-6 of each other

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        InvalidDistributionException

    """
    p = np.asarray(p_row, dtype=np.float64)
    q = np.asarray(q_row, dtype=np.float64)
    if p.ndim != 1 or p.shape != q.shape or p.shape[0] == 0:
        raise DimensionMismatchException(
            f"Rows must be non-empty 1-D vectors of equal length, got {p.shape} and {q.shape}"
        )
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise NonFiniteValueException("Rows contain NaN or Inf")
    if check:
        if min(p.min(), q.min()) < -ROW_NEGATIVITY_SLACK:
            raise InvalidDistributionException("Rows must be nonnegative")
        if abs(p.sum() - q.sum()) > ROW_MASS_SLACK:
            raise InvalidDistributionException(f"Rows carry different mass {p.sum():.9f} and {q.sum():.9f}")
    return float(np.sum(np.abs(np.cumsum(p - q)[:-1])))


def mean_wasserstein_matrices(a: Any, b: Any, check: bool = True) -> float:
    """Mean of wasserstein1_rows over the rows of a pair of matrices, averaged over a batch of pairs

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        InvalidDistributionException
    """
    a, b = _matrix_batch(a, b)
    per_matrix = [
        np.mean([wasserstein1_rows(p_row, q_row, check=check) for p_row, q_row in zip(a_i, b_i)])
        for a_i, b_i in zip(a, b)
    ]
    return float(np.mean(per_matrix))


def mse(p: Any, q: Any) -> float:
    """Mean squared error between two prediction vectors"""
    p, q = _prediction_pair(p, q)
    return float(np.mean((p - q) ** 2))


def rmse(p: Any, q: Any) -> float:
    """Root-mean-square deviation, sqrt(sum (p_i - q_i)^2 / n)"""
    return float(np.sqrt(mse(p, q)))


def pearson_r2(p: Any, q: Any) -> float:
    """Coefficient of determination of q against the reference p

    1 - sum (p_i - q_i)^2 / sum (p_i - mean(p))^2. Not symmetric, and negative when q is worse than the mean of p.

    Raises:
        DimensionMismatchException
        DegenerateException
    """
    p, q = _prediction_pair(p, q)
    total = float(np.sum((p - p.mean()) ** 2))
    if total <= MIN_VARIANCE:
        raise DegenerateException("Reference predictions have zero variance, r2 is undefined")
    return 1.0 - float(np.sum((p - q) ** 2)) / total


def l2_rel(a: Any, b: Any) -> float:
    """Mean over pairs of ||A1 - A2|| / (||A1|| + ||A2||), Frobenius norms

    Raises:
        DimensionMismatchException
        DegenerateException
    """
    a, b = _matrix_batch(a, b)
    difference = np.linalg.norm(a - b, axis=(1, 2))
    scale = np.linalg.norm(a, axis=(1, 2)) + np.linalg.norm(b, axis=(1, 2))
    if np.any(scale == 0.0):
        raise DegenerateException("l2_rel is undefined when both matrices of a pair are zero")
    return float(np.mean(difference / scale))


def l2_scaled(a: Any, b: Any) -> float:
    """Mean over pairs of ||A1 - A2|| / n, Frobenius norm, n the row count

    Raises:
        DimensionMismatchException
    """
    a, b = _matrix_batch(a, b)
    return float(np.mean(np.linalg.norm(a - b, axis=(1, 2)) / a.shape[1]))


def compare_predictions(p: Any, q: Any) -> MetricsReport:
    """Compute every prediction metric between the reference p and q

    r2 is None when p has zero variance; l2_rel is None when both vectors are zero.

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        InvalidDistributionException
    """
    p, q = _prediction_pair(p, q)
    try:
        r2: Optional[float] = pearson_r2(p, q)
    except DegenerateException:
        logger.warning("Reference predictions have zero variance, r2 not reported")
        r2 = None
    try:
        relative: Optional[float] = l2_rel(p[:, np.newaxis], q[:, np.newaxis])
    except DegenerateException:
        relative = None
    return MetricsReport(
        wasserstein=wasserstein1_predictions(p, q),
        rmse=rmse(p, q),
        mse=mse(p, q),
        r2=r2,
        l2_rel=relative,
        l2_scaled=l2_scaled(p[:, np.newaxis], q[:, np.newaxis]),
        n_samples=int(p.shape[0]),
    )

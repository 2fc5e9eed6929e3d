# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

""" Kernel-based adversarial attention for the effattention library

Adding a matrix B whose rows lie in Ker([T,1]') to an attention matrix A changes the weights without changing A.T or
the row sums. Stepping along such a B while staying inside the simplex yields a distinct attention matrix with the
same prediction, and the same efficient attention.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from effattention.attention import as_attention, prediction_error
from effattention.constants import Defaults
from effattention.decorators import conformable_pair
from effattention.Exceptions import (
    DegenerateException,
    DimensionMismatchException,
    GuaranteeViolationException,
    IdentifiableException,
)
from effattention.linalg import Matrix, as_matrix, augment_ones, null_space_basis, residual_bound
from effattention.tolerance import DEFAULT_TOLERANCE, Tolerance

logger = logging.getLogger(__name__)

NO_ADVERSARIAL_MESSAGE = "no adversarial exists: attention identifiable"


@dataclass(frozen=True)
class AdversarialSample:
    """An attention matrix and a distinct, prediction-equivalent adversarial obtained along a kernel direction"""

    original: Matrix
    adversarial: Matrix
    lambda_used: float
    kernel_direction: Matrix

    @property
    def linf_gap(self) -> float:
        return float(np.max(np.abs(self.adversarial - self.original)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda_used": self.lambda_used,
            "linf_gap": self.linf_gap,
            "min_entry": float(self.adversarial.min()),
            "max_row_sum_error": float(np.max(np.abs(self.adversarial.sum(axis=1) - 1.0))),
        }


def kernel_perturbation(t: Any, seed: int, tol: Tolerance = DEFAULT_TOLERANCE) -> Matrix:
    """Draw one random unit vector of Ker([T,1]') per row of T

    Each row is a standard normal combination of the kernel basis, normalised to unit length. The draws come from a
    PCG64 generator seeded with seed, so the output is reproducible.

    Args:
        t (array-like): (d_s x d) hidden states T
        seed (int): Seed for the generator
        tol (Tolerance): Thresholds to use

    Returns:
        numpy.ndarray: (d_s x d_s) matrix whose rows lie in Ker([T,1]')

    Raises:
        IdentifiableException
        DimensionMismatchException
        NonFiniteValueException

    """
    kernel = null_space_basis(augment_ones(t), tol)
    if kernel.count == 0:
        logger.error(NO_ADVERSARIAL_MESSAGE)
        raise IdentifiableException(NO_ADVERSARIAL_MESSAGE)

    rng = np.random.Generator(np.random.PCG64(seed))
    coefficients = rng.standard_normal((kernel.ambient_dim, kernel.count))
    coefficients /= np.linalg.norm(coefficients, axis=1, keepdims=True)
    logger.debug(f"Drew {kernel.ambient_dim:d} kernel directions from a {kernel.count:d}-dimensional kernel")
    return coefficients @ kernel.vectors


def max_step(a: Any, direction: Any) -> float:
    """Largest step lambda such that a + lambda * direction stays entrywise nonnegative

    Per row this is the minimum of a / -b over the entries where b < 0; the result is the minimum over rows. Rows
    without a negative entry do not constrain the step.

    Raises:
        DimensionMismatchException
        NonFiniteValueException
    """
    a = as_matrix(a, "A")
    direction = as_matrix(direction, "direction")
    if a.shape != direction.shape:
        raise DimensionMismatchException(f"A has shape {a.shape} but the direction has shape {direction.shape}")
    negative = direction < 0.0
    if not negative.any():
        return float("inf")
    ratios = np.full(a.shape, np.inf)
    ratios[negative] = a[negative] / -direction[negative]
    return float(ratios.min())


@conformable_pair
def generate_adversarial(a: Matrix, t: Matrix, seed: int, tol: Tolerance = DEFAULT_TOLERANCE) -> AdversarialSample:
    """Generate a distinct attention matrix with the same prediction as a

    Steps along seeded per-row kernel directions by half of the largest step keeping every entry nonnegative.

    Args:
        a (array-like): (d_s x d_s) strictly positive attention matrix
        t (array-like): (d_s x d) hidden states T
        seed (int): Seed for the kernel directions
        tol (Tolerance): Thresholds to use

    Returns:
        AdversarialSample

    Raises:
        IdentifiableException
        DegenerateException
        InvalidDistributionException
        GuaranteeViolationException

    """
    a = as_attention(a, tol)
    direction = kernel_perturbation(t, seed, tol)

    step = max_step(a, direction)
    if step < Defaults.MIN_STEP:
        message = (
            f"Largest admissible step {step:.3e} is below {Defaults.MIN_STEP:.0e}: "
            "A is too close to the simplex boundary"
        )
        logger.error(message)
        raise DegenerateException(message)

    lambda_used = Defaults.STEP_FRACTION * step
    adversarial = a + lambda_used * direction
    sample = AdversarialSample(original=a, adversarial=adversarial, lambda_used=lambda_used, kernel_direction=direction)

    if sample.linf_gap < Defaults.MIN_ADVERSARIAL_GAP:
        message = f"Adversarial differs from A by only {sample.linf_gap:.3e}"
        logger.error(message)
        raise DegenerateException(message)
    error = prediction_error(a, adversarial, t)
    bound = max(tol.check_abs, lambda_used * residual_bound(augment_ones(t), tol))
    if error > bound:
        message = f"Adversarial changed A.T by {error:.3e}, above {bound:.1e}"
        logger.error(message)
        raise GuaranteeViolationException(message)

    logger.info(f"Generated adversarial with lambda={lambda_used:.3e}, l-infinity gap {sample.linf_gap:.3e}")
    return sample


def complement_attention(a: Any, renormalize: bool = False) -> Matrix:
    """The entrywise complement 1 - A

    Rows of 1 - A sum to d_s - 1, so it is not a distribution. With renormalize set, rows are divided by d_s - 1.

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        DegenerateException
    """
    a = as_matrix(a, "A")
    complement = 1.0 - a
    if renormalize:
        if a.shape[1] < 2:
            raise DegenerateException("Cannot renormalise the complement of a single-column matrix")
        complement /= a.shape[1] - 1
    return complement

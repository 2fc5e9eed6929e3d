# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

""" Efficient attention and its companions for the effattention library

Efficient attention projects each row of an attention matrix A onto Im([T,1]), the orthogonal complement of
Ker([T,1]'). The projection keeps A.T and the row sums of A, and restores identifiability. The effective attention
baseline projects onto Im(T) instead and keeps A.T only.

All operations are single head, single layer: multi-head inputs are the caller's loop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from effattention.constants import ViolationKind
from effattention.decorators import conformable_pair
from effattention.Exceptions import (
    DimensionMismatchException,
    GuaranteeViolationException,
    InvalidDistributionException,
)
from effattention.linalg import (
    Matrix,
    as_matrix,
    augment_ones,
    column_space_basis,
    project_rows,
    rank,
    residual_bound,
)
from effattention.tolerance import DEFAULT_TOLERANCE, Tolerance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Violation:
    """One row of an attention matrix failing a probability-distribution constraint"""

    row: int
    kind: str
    magnitude: float

    def to_dict(self) -> Dict[str, Any]:
        return {"row": self.row, "kind": self.kind, "magnitude": self.magnitude}


@dataclass(frozen=True)
class Decomposition:
    """The unique split A = a_perp + a_sharp with rows of a_perp in Im([T,1]) and rows of a_sharp in Ker([T,1]')"""

    a_perp: Matrix
    a_sharp: Matrix

    def verify(self, a: Matrix, t: Matrix, tol: Tolerance = DEFAULT_TOLERANCE) -> None:
        """Check the decomposition invariants against the matrices it was built from

        Raises:
            GuaranteeViolationException
        """
        spanned = augment_ones(t)
        sharp_norm = float(np.max(np.linalg.norm(self.a_sharp, axis=1)))
        leak_bound = max(tol.check_abs, residual_bound(spanned, tol) * sharp_norm)
        checks = (
            ("reconstruction error", np.max(np.abs(self.a_perp + self.a_sharp - a)), min(tol.check_abs, 1e-10)),
            ("kernel leakage of a_sharp", np.max(np.abs(self.a_sharp @ spanned)), leak_bound),
            (
                "row-wise inner product",
                np.max(np.abs(np.einsum("ij,ij->i", self.a_perp, self.a_sharp))),
                tol.check_abs,
            ),
            ("a_sharp row sum", np.max(np.abs(self.a_sharp.sum(axis=1))), leak_bound),
            ("a_perp row sum drift", np.max(np.abs(self.a_perp.sum(axis=1) - a.sum(axis=1))), leak_bound),
        )
        for name, value, bound in checks:
            if value > bound:
                message = f"Decomposition {name} is {value:.3e}, above {bound:.1e}"
                logger.error(message)
                raise GuaranteeViolationException(message)


@dataclass(frozen=True)
class IdentifiabilityVerdict:
    """Ranks of T and [T,1] and the identifiability conclusions drawn from them"""

    d_s: int
    d_v: int
    rank_t: int
    rank_t1: int
    kernel_dim: int
    raw_identifiable: bool
    stochastic_identifiable: bool
    dimension_sufficient_nonident: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d_s": self.d_s,
            "d_v": self.d_v,
            "rank_t": self.rank_t,
            "rank_t1": self.rank_t1,
            "kernel_dim": self.kernel_dim,
            "raw_identifiable": self.raw_identifiable,
            "stochastic_identifiable": self.stochastic_identifiable,
            "dimension_sufficient_nonident": self.dimension_sufficient_nonident,
        }


def as_attention(a: Any, tol: Tolerance = DEFAULT_TOLERANCE) -> Matrix:
    """Validate that a is a square matrix whose rows are probability distributions

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        InvalidDistributionException
    """
    a = as_matrix(a, "A")
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchException(f"Attention matrix must be square, got shape {a.shape}")
    violations = validate_distribution(a, tol)
    if violations:
        worst = max(violations, key=lambda v: v.magnitude)
        message = (
            f"Attention matrix has {len(violations):d} distribution violation(s), worst is {worst.kind} "
            f"of {worst.magnitude:.3e} in row {worst.row:d}"
        )
        logger.error(message)
        raise InvalidDistributionException(message)
    return a


def _clamp_small_negatives(a_eff: Matrix, tol: Tolerance) -> Matrix:
    # Entries in [-check_abs, 0) go to zero and the row is rescaled to its pre-clamp sum
    tiny = (a_eff < 0.0) & (a_eff >= -tol.check_abs)
    if not tiny.any():
        return a_eff
    rows = np.flatnonzero(tiny.any(axis=1))
    logger.debug(f"Clamping {int(tiny.sum()):d} entries in [-{tol.check_abs:.1e}, 0) across {rows.size:d} row(s)")
    before = a_eff[rows].sum(axis=1)
    a_eff[tiny] = 0.0
    after = a_eff[rows].sum(axis=1)
    scale = np.divide(before, after, out=np.ones_like(before), where=after != 0.0)
    a_eff[rows] *= scale[:, np.newaxis]
    return a_eff


def _assert_preserved(
    kind: str, a: Matrix, out: Matrix, t: Matrix, tol: Tolerance, spanned: Matrix, row_sums: bool
) -> None:
    # Columns of spanned left outside the computed basis may meet the removed component at residual_bound size
    moved = float(np.max(np.linalg.norm(out - a, axis=1)))
    bound = max(tol.check_abs, residual_bound(spanned, tol) * moved)
    error = float(np.max(np.abs(out @ t - a @ t)))
    if error > bound:
        message = f"{kind} changed A.T by {error:.3e}, above {bound:.1e}"
        logger.error(message)
        raise GuaranteeViolationException(message)
    if row_sums:
        drift = float(np.max(np.abs(out.sum(axis=1) - a.sum(axis=1))))
        if drift > bound:
            message = f"{kind} changed row sums by {drift:.3e}, above {bound:.1e}"
            logger.error(message)
            raise GuaranteeViolationException(message)


def _efficient_projection(a: Matrix, t: Matrix, tol: Tolerance, validate: bool) -> Matrix:
    # Unclamped projection; preservation is asserted here, on the exact image of the projector
    spanned = augment_ones(t)
    basis = column_space_basis(spanned, tol)
    if basis.count == a.shape[0]:
        logger.debug("rank([T,1]) = d_s, attention is identifiable and is its own efficient projection")
        return a
    a_eff = project_rows(a, basis)
    if validate:
        _assert_preserved("Efficient attention", a, a_eff, t, tol, spanned, row_sums=True)
    return a_eff


@conformable_pair
def efficient_attention(
    a: Matrix,
    t: Matrix,
    tol: Tolerance = DEFAULT_TOLERANCE,
    validate: bool = True,
    strict_positivity: bool = False,
) -> Matrix:
    """Project every row of a onto Im([T,1]) = Ker([T,1]')^perp

    When rank([T,1]) = d_s the projection is the identity and a copy of a is returned unchanged.

    A.T and the row sums are asserted on the projection itself. For nonnegative inputs, entries of the projection in
    [-tol.check_abs, 0) are then clamped to 0 and their row rescaled to its previous sum. The clamp moves a row's
    contribution to A.T by at most 2 * d_s * tol.check_abs * max|T|, and leaves row sums unchanged. Entries below
    -tol.check_abs are left in place, since removing them would change A.T; they are logged, and rejected when
    strict_positivity is set.

    Args:
        a (array-like): (d_s x d_s) attention matrix
        t (array-like): (d_s x d) hidden states T
        tol (Tolerance): Thresholds to use
        validate (boolean): Assert that A.T and the row sums are preserved. Disable for benchmarking.
        strict_positivity (boolean): Raise when the projection has entries below -tol.check_abs

    Returns:
        numpy.ndarray: The efficient attention matrix

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        GuaranteeViolationException

    """
    a_eff = _efficient_projection(a, t, tol, validate)
    if a_eff is a:
        return a

    if a.min() >= -tol.check_abs:
        a_eff = _clamp_small_negatives(a_eff, tol)
        lowest = float(a_eff.min())
        if lowest < -tol.check_abs:
            message = f"Efficient attention has negative weights down to {lowest:.3e}"
            if strict_positivity:
                logger.error(message)
                raise GuaranteeViolationException(message)
            logger.warning(message)
    return a_eff


@conformable_pair
def effective_attention_brunner(
    a: Matrix, t: Matrix, tol: Tolerance = DEFAULT_TOLERANCE, validate: bool = True
) -> Matrix:
    """Project every row of a onto Im(T) = Ker(T')^perp, the effective attention baseline

    A.T is preserved, row sums and positivity are not.

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        GuaranteeViolationException
    """
    basis = column_space_basis(t, tol)
    if basis.count == a.shape[0]:
        return a
    out = project_rows(a, basis)
    if validate:
        _assert_preserved("Effective attention", a, out, t, tol, t, row_sums=False)
    return out


@conformable_pair
def decompose(a: Matrix, t: Matrix, tol: Tolerance = DEFAULT_TOLERANCE) -> Decomposition:
    """Split a into its efficient part and its kernel part, a = a_perp + a_sharp

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        GuaranteeViolationException
    """
    a_perp = _efficient_projection(a, t, tol, validate=True)
    decomposition = Decomposition(a_perp=a_perp, a_sharp=a - a_perp)
    decomposition.verify(a, t, tol)
    return decomposition


def identifiability(t: Any, d_v: Optional[int] = None, tol: Tolerance = DEFAULT_TOLERANCE) -> IdentifiabilityVerdict:
    """Compute the ranks of T and [T,1] and decide identifiability

    A is identifiable as a raw matrix when rank(T) = d_s, and as a row-stochastic matrix when rank([T,1]) = d_s.
    d_s > d_v + 1 is sufficient for non-identifiability. When d_v is not given the column count of T is used, which
    bounds rank(T) in the same way.

    Args:
        t (array-like): (d_s x d) hidden states T
        d_v (int): Value dimension, optional
        tol (Tolerance): Thresholds to use

    Returns:
        IdentifiabilityVerdict

    Raises:
        DimensionMismatchException
        NonFiniteValueException

    """
    t = as_matrix(t, "T")
    d_s = t.shape[0]
    if d_v is None:
        d_v = t.shape[1]
    elif d_v < 1:
        raise DimensionMismatchException(f"d_v must be positive, got {d_v:d}")

    rank_t = rank(t, tol)
    rank_t1 = rank(augment_ones(t), tol)
    kernel_dim = d_s - rank_t1
    verdict = IdentifiabilityVerdict(
        d_s=d_s,
        d_v=int(d_v),
        rank_t=rank_t,
        rank_t1=rank_t1,
        kernel_dim=kernel_dim,
        raw_identifiable=rank_t == d_s,
        stochastic_identifiable=kernel_dim == 0,
        dimension_sufficient_nonident=d_s > d_v + 1,
    )
    if kernel_dim < max(0, d_s - d_v - 1):
        logger.warning(f"kernel_dim {kernel_dim:d} is below d_s - d_v - 1; is d_v={d_v:d} the true value dimension?")
    logger.debug(f"Identifiability: {verdict}")
    return verdict


def validate_distribution(m: Any, tol: Tolerance = DEFAULT_TOLERANCE) -> List[Violation]:
    """List the rows of m that are not probability distributions within tol.check_abs

    Never raises: an input that is not a 2-D numeric array yields a single MALFORMED violation on row -1.

    Returns:
        list of Violation: empty when every entry is >= -tol.check_abs and every row sum is within tol.check_abs of 1
    """
    try:
        m = np.asarray(m, dtype=np.float64)
    except (TypeError, ValueError):
        return [Violation(row=-1, kind=ViolationKind.MALFORMED, magnitude=float("inf"))]
    if m.ndim != 2 or m.size == 0:
        return [Violation(row=-1, kind=ViolationKind.MALFORMED, magnitude=float("inf"))]

    violations: List[Violation] = []
    for index, row in enumerate(m):
        if not np.all(np.isfinite(row)):
            violations.append(Violation(row=index, kind=ViolationKind.NON_FINITE, magnitude=float("inf")))
            continue
        lowest = float(row.min())
        if lowest < -tol.check_abs:
            violations.append(Violation(row=index, kind=ViolationKind.NEGATIVE, magnitude=-lowest))
        drift = abs(float(row.sum()) - 1.0)
        if drift > tol.check_abs:
            violations.append(Violation(row=index, kind=ViolationKind.ROW_SUM, magnitude=drift))
    return violations


def prediction_error(a: Any, b: Any, t: Any) -> float:
    """max |A.T - B.T|, the l-infinity change in contextualisation between two attention matrices

    Raises:
        DimensionMismatchException
        NonFiniteValueException
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    t = as_matrix(t, "T")
    if a.shape != b.shape:
        raise DimensionMismatchException(f"A has shape {a.shape} but B has shape {b.shape}")
    if t.shape[0] != a.shape[1]:
        raise DimensionMismatchException(f"T has {t.shape[0]:d} rows but A has {a.shape[1]:d} columns")
    return float(np.max(np.abs(a @ t - b @ t)))


def prediction_preserved(a: Any, b: Any, t: Any, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """True when A.T and B.T agree within tol.check_abs, i.e. the two attention matrices give the same prediction"""
    return prediction_error(a, b, t) <= tol.check_abs

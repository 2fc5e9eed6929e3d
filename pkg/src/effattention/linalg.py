# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

""" Dense linear-algebra kernels for the effattention library

Augmentation with a ones column, rank-revealing orthonormal bases (column-pivoted modified Gram-Schmidt with one
re-orthogonalisation pass), null spaces and orthogonal projection. All functions are pure.
"""

from __future__ import annotations

import logging
from typing import Any, Optional

import numpy as np
from numpy.typing import NDArray

from effattention.constants import Defaults
from effattention.Exceptions import (
    DimensionMismatchException,
    GuaranteeViolationException,
    NonFiniteValueException,
)
from effattention.tolerance import DEFAULT_TOLERANCE, Tolerance

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]
Vector = NDArray[np.float64]

NORM_TOLERANCE = 1e-12
ORTHOGONALITY_TOLERANCE = 1e-10


def as_matrix(m: Any, name: str = "matrix") -> Matrix:
    """Validate and copy an input into a finite, non-empty, 2-D float64 array

    Args:
        m (array-like): The input matrix
        name (str): Name used in error messages

    Returns:
        numpy.ndarray: A float64 copy of m

    Raises:
        DimensionMismatchException
        NonFiniteValueException

    """
    try:
        out = np.array(m, dtype=np.float64, copy=True)
    except (TypeError, ValueError) as e:
        raise DimensionMismatchException(f"{name} is not a rectangular numeric array: {str(e)}")
    if out.ndim != 2:
        raise DimensionMismatchException(f"{name} must be 2-D, got {out.ndim:d} dimension(s)")
    if out.shape[0] == 0 or out.shape[1] == 0:
        raise DimensionMismatchException(f"{name} must not be empty, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise NonFiniteValueException(f"{name} contains NaN or Inf")
    return out


def as_vector(v: Any, name: str = "vector") -> Vector:
    """Validate and copy an input into a finite, non-empty, 1-D float64 array

    Raises:
        DimensionMismatchException
        NonFiniteValueException
    """
    out = np.array(v, dtype=np.float64, copy=True)
    if out.ndim != 1 or out.shape[0] == 0:
        raise DimensionMismatchException(f"{name} must be a non-empty 1-D array, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise NonFiniteValueException(f"{name} contains NaN or Inf")
    return out


class OrthonormalBasis(object):
    """Ordered orthonormal family of vectors in R^ambient_dim

    The vectors are stored as the rows of a (count x ambient_dim) array. The invariants (unit norms within 1e-12,
    pairwise inner products within 1e-10, count <= ambient_dim) are checked on construction.
    """

    def __init__(self, ambient_dim: int, vectors: Optional[Matrix] = None) -> None:
        """Init function for the class

        Args:
            ambient_dim (int): Dimension of the ambient space
            vectors (numpy.ndarray): (count x ambient_dim) array whose rows are the basis vectors

        Raises:
            TypeError
            DimensionMismatchException
            GuaranteeViolationException

        """
        if isinstance(ambient_dim, bool) or not isinstance(ambient_dim, (int, np.integer)):
            raise TypeError("ambient_dim must be an integer")
        if ambient_dim < 1:
            raise DimensionMismatchException(f"ambient_dim must be positive, got {ambient_dim:d}")

        if vectors is None:
            vectors = np.zeros((0, ambient_dim), dtype=np.float64)
        vectors = np.array(vectors, dtype=np.float64, copy=True).reshape(-1, ambient_dim)
        if vectors.shape[0] > ambient_dim:
            raise DimensionMismatchException(
                f"{vectors.shape[0]:d} vectors cannot be orthonormal in dimension {ambient_dim:d}"
            )

        gram = vectors @ vectors.T
        norm_error = np.abs(np.diag(gram) - 1.0)
        if norm_error.size and norm_error.max() > NORM_TOLERANCE:
            message = f"Basis vector norms deviate from 1 by {norm_error.max():.3e}"
            logger.error(message)
            raise GuaranteeViolationException(message)
        off_diagonal = np.abs(gram - np.diag(np.diag(gram)))
        if off_diagonal.size and off_diagonal.max() > ORTHOGONALITY_TOLERANCE:
            message = f"Basis vectors are not orthogonal, largest inner product {off_diagonal.max():.3e}"
            logger.error(message)
            raise GuaranteeViolationException(message)

        vectors.setflags(write=False)
        self.ambient_dim: int = int(ambient_dim)
        self.vectors: Matrix = vectors

    @property
    def count(self) -> int:
        return int(self.vectors.shape[0])

    def as_columns(self) -> Matrix:
        """The basis as an (ambient_dim x count) matrix with orthonormal columns"""
        return np.array(self.vectors.T)

    def contains(self, v: Any, atol: float = DEFAULT_TOLERANCE.check_abs) -> bool:
        """True when v lies in the span of the basis within atol (l-infinity)"""
        v = as_vector(v)
        return bool(np.max(np.abs(v - project_onto(v, self))) <= atol)

    def __len__(self) -> int:
        return self.count

    def __str__(self):
        return f"OrthonormalBasis(ambient_dim={self.ambient_dim:d}, count={self.count:d})"

    def __repr__(self):
        return str(self)


def _fix_signs(vectors: Matrix) -> Matrix:
    # First coordinate above the threshold is made positive
    for row in vectors:
        significant = np.flatnonzero(np.abs(row) > Defaults.SIGN_THRESHOLD)
        if significant.size and row[significant[0]] < 0:
            row *= -1.0
    return vectors


def _pivoted_gram_schmidt(
    candidates: Matrix, threshold: float, limit: int, prior: Optional[Matrix] = None
) -> Matrix:
    """Greedy column-pivoted modified Gram-Schmidt over the columns of candidates.

    At each step the candidate with the largest residual norm is accepted if that norm exceeds threshold. The accepted
    vector gets one re-orthogonalisation pass against everything accepted before it (including prior). Returns the
    accepted vectors as rows. Ties on the residual norm go to the lowest column index.
    """
    n = candidates.shape[0]
    prior = np.zeros((0, n)) if prior is None else prior
    residual = np.array(candidates, dtype=np.float64, copy=True)
    if prior.shape[0]:
        for _ in range(2):
            residual -= prior.T @ (prior @ residual)

    accepted = []
    while len(accepted) < limit:
        norms = np.linalg.norm(residual, axis=0)
        pivot = int(np.argmax(norms))
        if norms[pivot] <= threshold:
            break
        q = residual[:, pivot] / norms[pivot]
        previous = np.vstack([prior] + [a[np.newaxis, :] for a in accepted])
        if previous.shape[0]:
            q = q - previous.T @ (previous @ q)
            q = q / np.linalg.norm(q)
        accepted.append(q)
        residual -= np.outer(q, q @ residual)
        residual[:, pivot] = 0.0
        logger.debug(f"Accepted pivot column {pivot:d} with residual norm {norms[pivot]:.3e}")

    if not accepted:
        return np.zeros((0, n), dtype=np.float64)
    return np.vstack(accepted)


def column_scale(m: Any) -> float:
    """Largest column norm of m, the reference scale for rank decisions"""
    m = as_matrix(m)
    return float(np.max(np.linalg.norm(m, axis=0)))


def residual_bound(m: Any, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """Largest residual |m'v| allowed for a vector v of unit length outside the numerical column space of m

    Columns are dropped from a basis once their residual norm falls to tol.rank_rel times the column scale, so a
    discarded direction can still meet them at that size. The bound never goes below tol.check_abs.
    """
    return max(tol.check_abs, tol.rank_rel * column_scale(m))


def augment_ones(t: Any) -> Matrix:
    """Append a column of ones to t, giving [T,1]

    Args:
        t (array-like): (d_s x d) matrix with at least one row

    Returns:
        numpy.ndarray: (d_s x (d+1)) matrix whose first d columns equal t and whose last column is all ones

    Raises:
        DimensionMismatchException
        NonFiniteValueException

    """
    t = as_matrix(t, "T")
    return np.hstack([t, np.ones((t.shape[0], 1), dtype=np.float64)])


def column_space_basis(m: Any, tol: Tolerance = DEFAULT_TOLERANCE) -> OrthonormalBasis:
    """Orthonormal basis of the column space Im(m)

    Uses column-pivoted modified Gram-Schmidt: the column with the largest residual norm is accepted while its
    residual norm exceeds tol.rank_rel times the largest initial column norm. The first significant coordinate of
    each vector is positive, so the output is deterministic for a given input.

    Args:
        m (array-like): The matrix whose column space is wanted
        tol (Tolerance): Thresholds to use

    Returns:
        OrthonormalBasis: count equals the numerical rank of m

    Raises:
        DimensionMismatchException
        NonFiniteValueException

    """
    m = as_matrix(m)
    rows, cols = m.shape
    scale = column_scale(m)
    if scale == 0.0:
        return OrthonormalBasis(rows)

    vectors = _pivoted_gram_schmidt(m, tol.rank_rel * scale, min(rows, cols))
    return OrthonormalBasis(rows, _fix_signs(vectors))


def rank(m: Any, tol: Tolerance = DEFAULT_TOLERANCE) -> int:
    """Numerical rank of m, the size of its column space basis under tol.rank_rel"""
    return column_space_basis(m, tol).count


def null_space_basis(m: Any, tol: Tolerance = DEFAULT_TOLERANCE) -> OrthonormalBasis:
    """Orthonormal basis of Ker(m'), the orthogonal complement of Im(m) in R^rows(m)

    The standard basis vectors of R^rows(m) are orthogonalised against the column space basis with the same pivoted
    Gram-Schmidt until rows(m) - rank(m) vectors have been accepted.

    Args:
        m (array-like): The matrix, viewed as a family of column vectors
        tol (Tolerance): Thresholds to use

    Returns:
        OrthonormalBasis: count equals rows(m) - rank(m); every vector v satisfies max|m'v| <= residual_bound(m, tol)

    Raises:
        DimensionMismatchException
        NonFiniteValueException
        GuaranteeViolationException

    """
    m = as_matrix(m)
    rows = m.shape[0]
    image = column_space_basis(m, tol)
    needed = rows - image.count
    if needed == 0:
        return OrthonormalBasis(rows)

    # The complement projector has trace `needed`, so some residual always has squared norm >= 1/rows
    threshold = 0.5 / np.sqrt(rows)
    vectors = _pivoted_gram_schmidt(np.eye(rows), threshold, needed, prior=np.array(image.vectors))
    if vectors.shape[0] != needed:
        message = f"Null space basis has {vectors.shape[0]:d} vectors, expected {needed:d}"
        logger.error(message)
        raise GuaranteeViolationException(message)

    basis = OrthonormalBasis(rows, _fix_signs(vectors))
    leakage = float(np.max(np.abs(m.T @ basis.vectors.T)))
    bound = residual_bound(m, tol)
    if leakage > bound:
        message = f"Null space vectors leave a residual of {leakage:.3e} under m', above {bound:.1e}"
        logger.error(message)
        raise GuaranteeViolationException(message)
    return basis


def project_onto(v: Any, basis: OrthonormalBasis) -> Vector:
    """Orthogonal projection of v onto the span of basis, sum_i (v . u_i) u_i

    Raises:
        DimensionMismatchException
        NonFiniteValueException
    """
    v = as_vector(v)
    if v.shape[0] != basis.ambient_dim:
        raise DimensionMismatchException(
            f"Vector of length {v.shape[0]:d} cannot be projected onto a basis of R^{basis.ambient_dim:d}"
        )
    if basis.count == 0:
        return np.zeros_like(v)
    return basis.vectors.T @ (basis.vectors @ v)


def project_rows(m: Any, basis: OrthonormalBasis) -> Matrix:
    """Project every row of m onto the span of basis

    Raises:
        DimensionMismatchException
        NonFiniteValueException
    """
    m = as_matrix(m)
    if m.shape[1] != basis.ambient_dim:
        raise DimensionMismatchException(
            f"Rows of length {m.shape[1]:d} cannot be projected onto a basis of R^{basis.ambient_dim:d}"
        )
    if basis.count == 0:
        return np.zeros_like(m)
    return (m @ basis.vectors.T) @ basis.vectors

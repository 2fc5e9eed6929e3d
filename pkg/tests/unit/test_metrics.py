# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

"""
Testing of "metrics" library
"""
import logging
from itertools import permutations
from unittest import TestCase
from unittest import main as ut_main

import numpy as np
from scipy.optimize import linprog

from effattention import (
    compare_predictions,
    l2_rel,
    l2_scaled,
    mean_wasserstein_matrices,
    mse,
    pearson_r2,
    rmse,
    wasserstein1_predictions,
    wasserstein1_rows,
)
from effattention.Exceptions import (
    DegenerateException,
    DimensionMismatchException,
    InvalidDistributionException,
    NonFiniteValueException,
)


def transport_lp(p: np.ndarray, q: np.ndarray) -> float:
    """Minimum cost of moving p onto q with cost |i - j|, as a linear program over the coupling"""
    n = p.shape[0]
    cost = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
    a_eq = np.vstack([np.kron(np.eye(n), np.ones(n)), np.kron(np.ones(n), np.eye(n))])
    b_eq = np.concatenate([p, q])
    # One marginal constraint is implied by the others
    result = linprog(cost.ravel(), A_eq=a_eq[:-1], b_eq=b_eq[:-1], bounds=(0, None))
    return float(result.fun)


def coupling_minimum(p: np.ndarray, q: np.ndarray) -> float:
    """Minimum over permutation couplings of the mean absolute difference"""
    return min(float(np.mean(np.abs(p - q[list(perm)]))) for perm in permutations(range(p.shape[0])))


class PredictionWassersteinTests(TestCase):
    def test_closed_form(self) -> None:
        self.assertAlmostEqual(0.5, wasserstein1_predictions([0.0, 1.0], [0.5, 0.5]), places=15)

    def test_identical(self) -> None:
        self.assertEqual(0.0, wasserstein1_predictions([0.2, 0.7, 0.1], [0.1, 0.2, 0.7]))

    def test_matches_permutation_couplings(self) -> None:
        rng = np.random.default_rng(6)
        for n in range(1, 7):
            for _ in range(20):
                p = rng.uniform(size=n)
                q = rng.uniform(size=n)
                self.assertAlmostEqual(coupling_minimum(p, q), wasserstein1_predictions(p, q), delta=1e-12)

    def test_length_mismatch(self) -> None:
        with self.assertRaises(DimensionMismatchException):
            wasserstein1_predictions([0.1, 0.2], [0.1])

    def test_empty(self) -> None:
        with self.assertRaises(DimensionMismatchException):
            wasserstein1_predictions([], [])

    def test_out_of_range(self) -> None:
        with self.assertRaises(InvalidDistributionException):
            wasserstein1_predictions([0.1, 1.5], [0.1, 0.2])

    def test_non_finite(self) -> None:
        with self.assertRaises(NonFiniteValueException):
            wasserstein1_predictions([0.1, np.nan], [0.1, 0.2])

    def test_symmetric(self) -> None:
        rng = np.random.default_rng(101)
        for _ in range(100):
            p, q = rng.uniform(size=(2, int(rng.integers(1, 20))))
            self.assertEqual(wasserstein1_predictions(p, q), wasserstein1_predictions(q, p))
            self.assertEqual(rmse(p, q), rmse(q, p))
            self.assertLessEqual(wasserstein1_predictions(p, p), 1e-12)
            self.assertLessEqual(rmse(p, p), 1e-12)


class RowWassersteinTests(TestCase):
    def test_opposite_ends(self) -> None:
        self.assertAlmostEqual(2.0, wasserstein1_rows([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]))

    def test_identical(self) -> None:
        self.assertEqual(0.0, wasserstein1_rows([0.2, 0.3, 0.5], [0.2, 0.3, 0.5]))

    def test_single_position(self) -> None:
        self.assertEqual(0.0, wasserstein1_rows([1.0], [1.0]))

    def test_matches_transport_lp(self) -> None:
        rng = np.random.default_rng(15)
        for n in range(2, 6):
            for _ in range(10):
                p = rng.dirichlet(np.ones(n))
                q = rng.dirichlet(np.ones(n))
                self.assertAlmostEqual(transport_lp(p, q), wasserstein1_rows(p, q), delta=1e-8)

    def test_negative(self) -> None:
        with self.assertRaises(InvalidDistributionException):
            wasserstein1_rows([1.2, -0.2], [0.5, 0.5])

    def test_mass_mismatch(self) -> None:
        with self.assertRaises(InvalidDistributionException):
            wasserstein1_rows([0.5, 0.5], [0.5, 0.25])

    def test_unchecked_signed_rows(self) -> None:
        self.assertAlmostEqual(0.7, wasserstein1_rows([1.2, -0.2], [0.5, 0.5], check=False))

    def test_length_mismatch(self) -> None:
        with self.assertRaises(DimensionMismatchException):
            wasserstein1_rows([0.5, 0.5], [1.0])

    def test_metric_axioms(self) -> None:
        rng = np.random.default_rng(100)
        for _ in range(100):
            n = int(rng.integers(2, 10))
            p, q, r = rng.dirichlet(np.ones(n), size=3)
            self.assertEqual(wasserstein1_rows(p, q), wasserstein1_rows(q, p))
            self.assertLessEqual(wasserstein1_rows(p, p), 1e-12)
            self.assertGreater(wasserstein1_rows(p, q), 1e-12)
            self.assertLessEqual(wasserstein1_rows(p, r), wasserstein1_rows(p, q) + wasserstein1_rows(q, r) + 1e-9)


class MatrixMetricTests(TestCase):
    def test_mean_row_wasserstein(self) -> None:
        a = np.array([[1.0, 0.0], [0.5, 0.5]])
        b = np.array([[0.0, 1.0], [0.5, 0.5]])
        self.assertAlmostEqual(0.5, mean_wasserstein_matrices(a, b))

    def test_reversed_identity(self) -> None:
        self.assertAlmostEqual(4.0 / 3.0, mean_wasserstein_matrices(np.eye(3), np.eye(3)[::-1]), places=15)

    def test_batch_is_mean_of_pairs(self) -> None:
        rng = np.random.default_rng(4)
        a = rng.dirichlet(np.ones(4), size=(3, 4))
        b = rng.dirichlet(np.ones(4), size=(3, 4))
        expected = np.mean([mean_wasserstein_matrices(a[i], b[i]) for i in range(3)])
        self.assertAlmostEqual(expected, mean_wasserstein_matrices(a, b), places=14)

    def test_shape_mismatch(self) -> None:
        with self.assertRaises(DimensionMismatchException):
            mean_wasserstein_matrices(np.eye(2), np.eye(3))

    def test_l2_rel(self) -> None:
        self.assertAlmostEqual(1.0, l2_rel(np.eye(2), np.zeros((2, 2))))
        self.assertEqual(0.0, l2_rel(np.eye(2), np.eye(2)))

    def test_l2_rel_zero(self) -> None:
        with self.assertRaises(DegenerateException):
            l2_rel(np.zeros((2, 2)), np.zeros((2, 2)))

    def test_l2_scaled(self) -> None:
        self.assertAlmostEqual(np.sqrt(2.0) / 2.0, l2_scaled(np.eye(2), np.zeros((2, 2))))
        self.assertAlmostEqual(1.0, l2_scaled(np.eye(2), np.eye(2)[::-1]), places=15)

    def test_non_finite(self) -> None:
        with self.assertRaises(NonFiniteValueException):
            l2_scaled(np.eye(2), np.full((2, 2), np.inf))


class PredictionMetricTests(TestCase):
    def test_rmse_closed_form(self) -> None:
        self.assertAlmostEqual(0.5, rmse([0.0, 1.0], [0.5, 0.5]))
        self.assertAlmostEqual(0.25, mse([0.0, 1.0], [0.5, 0.5]))

    def test_r2(self) -> None:
        self.assertEqual(1.0, pearson_r2([0.1, 0.9], [0.1, 0.9]))
        self.assertAlmostEqual(0.0, pearson_r2([0.0, 1.0], [0.5, 0.5]))
        self.assertAlmostEqual(-3.0, pearson_r2([0.0, 1.0], [1.0, 0.0]), places=15)

    def test_r2_constant_reference(self) -> None:
        with self.assertRaises(DegenerateException):
            pearson_r2([0.5, 0.5], [0.1, 0.9])

    def test_compare_identical(self) -> None:
        report = compare_predictions([0.1, 0.4, 0.8], [0.1, 0.4, 0.8])
        self.assertEqual(0.0, report.wasserstein)
        self.assertEqual(0.0, report.rmse)
        self.assertEqual(1.0, report.r2)
        self.assertEqual(0.0, report.l2_rel)
        self.assertEqual(3, report.n_samples)

    def test_compare_constant_reference(self) -> None:
        with self.assertLogs("effattention.metrics", level=logging.WARNING):
            report = compare_predictions([0.5, 0.5], [0.1, 0.9])
        self.assertIsNone(report.r2)
        self.assertIsNone(report.to_dict()["r2"])

    def test_compare_all_zero(self) -> None:
        report = compare_predictions([0.0, 0.0], [0.0, 0.0])
        self.assertIsNone(report.l2_rel)


if __name__ == "__main__":
    ut_main()

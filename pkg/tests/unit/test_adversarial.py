# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

"""
Testing of "adversarial" library
"""
from unittest import TestCase
from unittest import main as ut_main

import numpy as np

from effattention import (
    augment_ones,
    complement_attention,
    efficient_attention,
    generate_adversarial,
    kernel_perturbation,
    max_step,
    prediction_error,
)
from effattention.Exceptions import (
    DegenerateException,
    DimensionMismatchException,
    IdentifiableException,
    InvalidDistributionException,
)

WORKED_A = np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]])
WORKED_T = np.array([[1.0], [0.0], [0.0]])


class KernelPerturbationTests(TestCase):
    def test_rows_in_kernel(self) -> None:
        t = np.random.default_rng(8).normal(size=(7, 2))
        direction = kernel_perturbation(t, seed=4)
        self.assertEqual((7, 7), direction.shape)
        self.assertLessEqual(float(np.max(np.abs(direction @ augment_ones(t)))), 1e-12)
        np.testing.assert_allclose(np.linalg.norm(direction, axis=1), np.ones(7), atol=1e-12)

    def test_deterministic(self) -> None:
        t = np.random.default_rng(8).normal(size=(7, 2))
        np.testing.assert_array_equal(kernel_perturbation(t, 4), kernel_perturbation(t, 4))
        self.assertFalse(np.array_equal(kernel_perturbation(t, 4), kernel_perturbation(t, 5)))

    def test_identifiable(self) -> None:
        with self.assertRaisesRegex(IdentifiableException, "no adversarial exists: attention identifiable"):
            kernel_perturbation(np.eye(3), 0)

    def test_scaled_hidden_states(self) -> None:
        # Second column repeats the first up to noise far below the rank threshold at every scale
        rng = np.random.default_rng(3)
        c = rng.normal(size=6)
        base = np.column_stack([c, c + 3e-11 * rng.normal(size=6)])
        for scale in (1.0, 100.0, 1e4):
            direction = kernel_perturbation(scale * base, seed=0)
            self.assertEqual((6, 6), direction.shape)
            np.testing.assert_allclose(np.linalg.norm(direction, axis=1), np.ones(6), atol=1e-12)


class MaxStepTests(TestCase):
    def test_no_negative_direction(self) -> None:
        self.assertEqual(float("inf"), max_step(WORKED_A, np.zeros((3, 3))))

    def test_minimum_over_rows(self) -> None:
        direction = np.array([[0.0, 1.0, -1.0], [0.0, -2.0, 2.0], [0.0, 0.0, 0.0]])
        # Row 0 allows 0.2, row 1 allows 0.25
        self.assertAlmostEqual(0.2, max_step(WORKED_A, direction))

    def test_shape_mismatch(self) -> None:
        with self.assertRaises(DimensionMismatchException):
            max_step(WORKED_A, np.zeros((2, 2)))

    def test_shape_mismatch_with_negative_direction(self) -> None:
        with self.assertRaises(DimensionMismatchException):
            max_step(np.ones((3, 3)) / 3, -np.ones((2, 2)))


class GenerateAdversarialTests(TestCase):
    def test_worked_example(self) -> None:
        sample = generate_adversarial(WORKED_A, WORKED_T, seed=7)
        self.assertGreaterEqual(sample.linf_gap, 1e-4)
        self.assertGreaterEqual(float(sample.adversarial.min()), 0.0)
        np.testing.assert_allclose(sample.adversarial.sum(axis=1), np.ones(3), atol=1e-12)
        self.assertLessEqual(prediction_error(WORKED_A, sample.adversarial, WORKED_T), 1e-10)
        np.testing.assert_allclose(
            efficient_attention(sample.adversarial, WORKED_T), efficient_attention(WORKED_A, WORKED_T), atol=1e-8
        )

    def test_deterministic(self) -> None:
        first = generate_adversarial(WORKED_A, WORKED_T, seed=7)
        second = generate_adversarial(WORKED_A, WORKED_T, seed=7)
        np.testing.assert_array_equal(first.adversarial, second.adversarial)
        self.assertEqual(first.lambda_used, second.lambda_used)

    def test_half_step(self) -> None:
        sample = generate_adversarial(WORKED_A, WORKED_T, seed=7)
        self.assertAlmostEqual(0.5 * max_step(WORKED_A, sample.kernel_direction), sample.lambda_used)

    def test_seed_changes_adversarial_not_efficient_attention(self) -> None:
        rng = np.random.default_rng(21)
        t = rng.normal(size=(8, 2))
        a = np.exp(rng.normal(size=(8, 8)) * 0.3)
        a /= a.sum(axis=1, keepdims=True)
        first = generate_adversarial(a, t, seed=1)
        second = generate_adversarial(a, t, seed=2)
        self.assertGreater(float(np.max(np.abs(first.adversarial - second.adversarial))), 1e-6)
        np.testing.assert_allclose(
            efficient_attention(first.adversarial, t), efficient_attention(second.adversarial, t), atol=1e-8
        )

    def test_identifiable(self) -> None:
        with self.assertRaisesRegex(IdentifiableException, "attention identifiable"):
            generate_adversarial(WORKED_A, np.eye(3), seed=0)

    def test_scaled_hidden_states(self) -> None:
        rng = np.random.default_rng(3)
        c = rng.normal(size=6)
        t = 100.0 * np.column_stack([c, c + 3e-11 * rng.normal(size=6)])
        a = np.full((6, 6), 1.0 / 6)
        sample = generate_adversarial(a, t, seed=0)
        self.assertGreaterEqual(float(sample.adversarial.min()), 0.0)
        self.assertLessEqual(prediction_error(a, sample.adversarial, t), 1e-7)

    def test_boundary(self) -> None:
        a = np.tile([1.0, 0.0, 0.0], (3, 1))
        with self.assertRaises(DegenerateException):
            generate_adversarial(a, WORKED_T, seed=0)

    def test_not_a_distribution(self) -> None:
        with self.assertRaises(InvalidDistributionException):
            generate_adversarial(WORKED_A * 2, WORKED_T, seed=0)

    def test_to_dict(self) -> None:
        report = generate_adversarial(WORKED_A, WORKED_T, seed=7).to_dict()
        self.assertEqual({"lambda_used", "linf_gap", "min_entry", "max_row_sum_error"}, set(report))
        self.assertLessEqual(report["max_row_sum_error"], 1e-12)


class ComplementAttentionTests(TestCase):
    def test_complement(self) -> None:
        np.testing.assert_allclose(complement_attention(WORKED_A), 1.0 - WORKED_A)
        np.testing.assert_allclose(complement_attention(WORKED_A).sum(axis=1), np.full(3, 2.0))

    def test_renormalized(self) -> None:
        out = complement_attention(WORKED_A, renormalize=True)
        np.testing.assert_allclose(out.sum(axis=1), np.ones(3))

    def test_uniform_two_is_fixed_point(self) -> None:
        a = np.full((2, 2), 0.5)
        np.testing.assert_array_equal(a, complement_attention(a))

    def test_single_column(self) -> None:
        with self.assertRaises(DegenerateException):
            complement_attention([[1.0]], renormalize=True)


if __name__ == "__main__":
    ut_main()

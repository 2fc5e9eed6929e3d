# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

"""
Testing of the "constant" library
"""
from unittest import TestCase
from unittest import main as ut_main

from effattention import Defaults, ExitCode, Experiment, MetricName, ViolationKind


class ExitCodeTests(TestCase):
    def test_success(self) -> None:
        self.assertEqual(0, ExitCode.SUCCESS)

    def test_not_identifiable(self) -> None:
        self.assertEqual(1, ExitCode.NOT_IDENTIFIABLE)

    def test_input_error(self) -> None:
        self.assertEqual(2, ExitCode.INPUT_ERROR)

    def test_validation_failure(self) -> None:
        self.assertEqual(3, ExitCode.VALIDATION_FAILURE)


class ViolationKindTests(TestCase):
    def test_negative(self) -> None:
        self.assertEqual("negative", ViolationKind.NEGATIVE)

    def test_row_sum(self) -> None:
        self.assertEqual("row_sum", ViolationKind.ROW_SUM)


class ExperimentTests(TestCase):
    def test_names(self) -> None:
        self.assertEqual(
            ["1", "2", "3"], [Experiment.PREDICTION_PRESERVATION, Experiment.ADVERSARIAL, Experiment.COMPLEMENT]
        )


class MetricNameTests(TestCase):
    def test_wasserstein(self) -> None:
        self.assertEqual("wasserstein", MetricName.WASSERSTEIN)

    def test_mean_row_wasserstein(self) -> None:
        self.assertEqual("mean_row_wasserstein", MetricName.MEAN_ROW_WASSERSTEIN)


class DefaultsTests(TestCase):
    def test_tolerances(self) -> None:
        self.assertEqual(1e-10, Defaults.RANK_REL)
        self.assertEqual(1e-9, Defaults.CHECK_ABS)

    def test_environment_variable(self) -> None:
        self.assertEqual("EFFATTENTION_TOLERANCE", Defaults.ENVIRONMENT_VARIABLE)

    def test_prng(self) -> None:
        self.assertEqual("numpy.random.PCG64", Defaults.PRNG)


if __name__ == "__main__":
    ut_main()

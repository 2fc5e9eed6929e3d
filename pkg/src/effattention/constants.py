# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

""" Constants for the effattention library.

These are the exit codes, violation kinds, experiment names, metric names and numerical defaults
"""


class ExitCode:
    """Command Line Exit Code Constants

    The contract is stable: scripts may branch on these values.
    """

    SUCCESS = 0
    NOT_IDENTIFIABLE = 1
    INPUT_ERROR = 2
    VALIDATION_FAILURE = 3


class ViolationKind:
    """Kinds of probability-distribution violation reported by validate_distribution"""

    NEGATIVE = "negative"
    ROW_SUM = "row_sum"
    NON_FINITE = "non_finite"
    MALFORMED = "malformed"


class Experiment:
    """Experiment Name Constants"""

    PREDICTION_PRESERVATION = "1"
    ADVERSARIAL = "2"
    COMPLEMENT = "3"


class MetricName:
    """Metric keys used in MetricsReport and ExperimentReport"""

    WASSERSTEIN = "wasserstein"
    RMSE = "rmse"
    MSE = "mse"
    R2 = "r2"
    L2_REL = "l2_rel"
    L2_SCALED = "l2_scaled"
    MEAN_ROW_WASSERSTEIN = "mean_row_wasserstein"


class Defaults:
    """Numerical defaults and names embedded in report metadata"""

    RANK_REL = 1e-10
    CHECK_ABS = 1e-9
    # Upper bound (exclusive) for both tolerances
    TOLERANCE_CEILING = 1e-2

    # Coordinates smaller than this are skipped when fixing the sign of a basis vector
    SIGN_THRESHOLD = 1e-12

    ENVIRONMENT_VARIABLE = "EFFATTENTION_TOLERANCE"
    PRNG = "numpy.random.PCG64"
    GROUND_METRIC = "unit-spaced positions |i - j|"
    L2_SCALED_NORMALIZATION = "row count d_s"

    # Minimum step along a kernel direction before a sample is declared degenerate
    MIN_STEP = 1e-8
    # Minimum l-infinity distance between an adversarial and its original
    MIN_ADVERSARIAL_GAP = 1e-4
    STEP_FRACTION = 0.5

    # Experiment 3: thresholds separating distinct efficient matrices and distinct predictions
    DISTINCT_ROW_WASSERSTEIN = 1e-3
    DISTINCT_PREDICTION = 1e-6

    TOOL_NAME = "effattention"

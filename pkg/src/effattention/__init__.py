# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

"""
Import classes, functions, and submodules to be accessible from library
"""

import effattention.Exceptions
from effattention.adversarial import (
    AdversarialSample,
    complement_attention,
    generate_adversarial,
    kernel_perturbation,
    max_step,
)
from effattention.attention import (
    Decomposition,
    IdentifiabilityVerdict,
    Violation,
    decompose,
    effective_attention_brunner,
    efficient_attention,
    identifiability,
    prediction_error,
    prediction_preserved,
    validate_distribution,
)
from effattention.constants import Defaults, ExitCode, Experiment, MetricName, ViolationKind
from effattention.decorators import command, conformable_pair
from effattention.harness import (
    ExperimentConfig,
    ExperimentReport,
    ModelParams,
    decode,
    forward,
    kernel_dimension_sweep,
    run_experiment1,
    run_experiment2,
    run_experiment3,
    synth_model,
)
from effattention.linalg import (
    OrthonormalBasis,
    augment_ones,
    column_space_basis,
    null_space_basis,
    project_onto,
    project_rows,
    rank,
)
from effattention.metrics import (
    MetricsReport,
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
from effattention.tolerance import DEFAULT_TOLERANCE, Tolerance

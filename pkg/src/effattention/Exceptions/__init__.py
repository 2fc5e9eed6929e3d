# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

"""
Bring exceptions into the root of the submodule
"""

from effattention.Exceptions.exceptions import (
    DegenerateException,
    DimensionMismatchException,
    GuaranteeViolationException,
    IdentifiableException,
    InvalidDistributionException,
    InvalidToleranceException,
    ManifestException,
    MatrixFileException,
    NonFiniteValueException,
)

# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

"""
Exceptions for the effattention library.

These are the exceptions that can be returned by effattention
"""

from typing import Optional


class DimensionMismatchException(Exception):
    """Indicates that the shapes of the inputs are empty or do not conform"""

    def __init__(self, *args):
        Exception.__init__(self, *args)


class NonFiniteValueException(Exception):
    """Indicates that an input contained NaN or Inf"""

    def __init__(self, *args):
        Exception.__init__(self, *args)


class InvalidToleranceException(Exception):
    """Indicates that a tolerance was not strictly positive and below the ceiling"""

    def __init__(self, *args):
        Exception.__init__(self, *args)


class IdentifiableException(Exception):
    """Indicates that the attention is identifiable, so no adversarial attention exists"""

    def __init__(self, *args):
        Exception.__init__(self, *args)


class DegenerateException(Exception):
    """Indicates that the input is too close to a boundary for the requested computation"""

    def __init__(self, *args):
        Exception.__init__(self, *args)


class GuaranteeViolationException(Exception):
    """Indicates that an asserted numerical guarantee did not hold within tolerance"""

    def __init__(self, *args):
        Exception.__init__(self, *args)


class InvalidDistributionException(Exception):
    """Indicates that a row passed as a distribution was negative or had mismatched mass"""

    def __init__(self, *args):
        Exception.__init__(self, *args)


class MatrixFileException(Exception):
    """Indicates that a matrix CSV file could not be parsed"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        if path is not None and line is not None:
            message = f"{path}:{line:d}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        Exception.__init__(self, message)


class ManifestException(Exception):
    """Indicates that a sample manifest is malformed or references missing files"""

    def __init__(self, *args):
        Exception.__init__(self, *args)

# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

""" Decorators for the effattention library.

This includes two decorators, one that validates the (attention, hidden states) pair handed to the core operations,
and one that wraps command line handlers to turn exceptions into exit codes.
"""
from __future__ import annotations

import logging
from functools import wraps
from typing import Any, Callable, TypeVar

from typing_extensions import Concatenate, ParamSpec

from effattention.constants import ExitCode
from effattention.Exceptions import (
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
from effattention.linalg import Matrix, as_matrix

logger = logging.getLogger(__name__)

_T = TypeVar("_T")
_P = ParamSpec("_P")

# Order matters: the first matching entry wins
EXIT_CODES = (
    (IdentifiableException, ExitCode.NOT_IDENTIFIABLE),
    (GuaranteeViolationException, ExitCode.VALIDATION_FAILURE),
    (MatrixFileException, ExitCode.INPUT_ERROR),
    (ManifestException, ExitCode.INPUT_ERROR),
    (DimensionMismatchException, ExitCode.INPUT_ERROR),
    (NonFiniteValueException, ExitCode.INPUT_ERROR),
    (InvalidDistributionException, ExitCode.INPUT_ERROR),
    (InvalidToleranceException, ExitCode.INPUT_ERROR),
    (DegenerateException, ExitCode.INPUT_ERROR),
)


def conformable_pair(func: Callable[Concatenate[Matrix, Matrix, _P], _T]) -> Callable[Concatenate[Any, Any, _P], _T]:
    """Decorate an operation taking (a, t) to validate and convert both inputs before running it.

    Usage:
        @conformable_pair
        def operation(a, t, tol=DEFAULT_TOLERANCE):
            ...

    The decorated function receives float64 copies of a and t. a must be square, t must have as many rows as a, and
    both must be finite.

    Raises:
        DimensionMismatchException
        NonFiniteValueException

    """

    # noinspection PyMissingOrEmptyDocstring
    @wraps(func)
    def pair_wrapper(a: Any, t: Any, *args: _P.args, **kwargs: _P.kwargs) -> _T:
        a = as_matrix(a, "A")
        t = as_matrix(t, "T")
        if a.shape[0] != a.shape[1]:
            message = f"Attention matrix must be square, got shape {a.shape}"
            logger.error(message)
            raise DimensionMismatchException(message)
        if t.shape[0] != a.shape[0]:
            message = f"T has {t.shape[0]:d} rows but the attention matrix has {a.shape[0]:d}"
            logger.error(message)
            raise DimensionMismatchException(message)
        logger.debug(f"Running {func.__name__} with d_s={a.shape[0]:d}, d={t.shape[1]:d}")
        return func(a, t, *args, **kwargs)

    return pair_wrapper


def command(func: Callable[_P, int]) -> Callable[_P, int]:
    """Decorate a command line handler to add exception handling and map failures to exit codes.

    Usage:
        @command
        def cmd_project(args):
            ...
            return ExitCode.SUCCESS

    Library exceptions are logged and mapped through EXIT_CODES; anything unexpected is logged and mapped to
    ExitCode.INPUT_ERROR.

    Returns:
        int: The exit code returned by the handler, or the one mapped from the exception it raised

    """

    # noinspection PyMissingOrEmptyDocstring
    @wraps(func)
    def command_wrapper(*args: _P.args, **kwargs: _P.kwargs) -> int:
        logger.info(f"Running command {func.__name__}")
        try:
            return func(*args, **kwargs)
        except Exception as e:
            for exception_class, code in EXIT_CODES:
                if isinstance(e, exception_class):
                    logger.error(f"Command {func.__name__} failed: {str(e)}")
                    return code
            logger.error(f'Command {func.__name__} failed due to exception "{e.__class__.__name__}: {str(e)}"')
            return ExitCode.INPUT_ERROR

    return command_wrapper

# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

""" Tolerance configuration for the effattention library

This allows you to define the thresholds used for rank decisions and invariant assertions
"""

from __future__ import annotations

import logging
import os
from typing import Dict, Mapping, Optional

from effattention.constants import Defaults
from effattention.Exceptions import InvalidToleranceException

logger = logging.getLogger(__name__)

_FIELDS = ("rank_rel", "check_abs")


class Tolerance(object):
    """Class that defines the numerical thresholds used by effattention"""

    def __init__(self, rank_rel: float = Defaults.RANK_REL, check_abs: float = Defaults.CHECK_ABS) -> None:
        """Init function for the class

        Args:
            rank_rel (float): Relative threshold for rank decisions. A residual column is accepted into a basis when
                its norm exceeds rank_rel times the largest initial column norm.
            check_abs (float): Absolute threshold used when asserting invariants (row sums, positivity,
                prediction preservation).

        Raises:
            TypeError
            InvalidToleranceException

        """
        for name, value in (("rank_rel", rank_rel), ("check_abs", check_abs)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError(f"{name} must be a real number")
            if not 0 < value < Defaults.TOLERANCE_CEILING:
                raise InvalidToleranceException(
                    f"{name} must be strictly positive and below {Defaults.TOLERANCE_CEILING}, got {value!r}"
                )

        self.rank_rel: float = float(rank_rel)
        self.check_abs: float = float(check_abs)

    @classmethod
    def from_mapping(cls, values: Mapping[str, float], base: Optional[Tolerance] = None) -> Tolerance:
        """Build a Tolerance from a mapping, falling back to base (or the defaults) for missing keys

        Raises:
            TypeError
            InvalidToleranceException
        """
        unknown = set(values) - set(_FIELDS)
        if unknown:
            raise InvalidToleranceException(f"Unknown tolerance fields: {', '.join(sorted(unknown))}")
        base = base if base is not None else cls()
        return cls(
            rank_rel=values.get("rank_rel", base.rank_rel),
            check_abs=values.get("check_abs", base.check_abs),
        )

    @classmethod
    def from_environment(cls, environ: Optional[Mapping[str, str]] = None) -> Tolerance:
        """Read the global override from the EFFATTENTION_TOLERANCE environment variable

        The variable holds a comma-separated key=value list, e.g. "rank_rel=1e-12,check_abs=1e-8".
        Missing keys keep their defaults. An unset or empty variable yields the defaults.

        Raises:
            InvalidToleranceException
        """
        environ = os.environ if environ is None else environ
        raw = environ.get(Defaults.ENVIRONMENT_VARIABLE, "").strip()
        if not raw:
            return cls()

        values: Dict[str, float] = {}
        for item in raw.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise InvalidToleranceException(
                    f"{Defaults.ENVIRONMENT_VARIABLE} entry {item!r} is not of the form key=value"
                )
            try:
                values[key.strip()] = float(value)
            except ValueError:
                raise InvalidToleranceException(f"{Defaults.ENVIRONMENT_VARIABLE} value {value!r} is not a number")
        tolerance = cls.from_mapping(values)
        logger.debug(f"Tolerance read from {Defaults.ENVIRONMENT_VARIABLE}: {tolerance}")
        return tolerance

    def to_dict(self) -> Dict[str, float]:
        return {"rank_rel": self.rank_rel, "check_abs": self.check_abs}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tolerance):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash((self.rank_rel, self.check_abs))

    def __str__(self):
        return f"Tolerance(rank_rel={self.rank_rel!r}, check_abs={self.check_abs!r})"

    def __repr__(self):
        return str(self)


DEFAULT_TOLERANCE = Tolerance()

# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

"""
Version lookup for report metadata
"""

from importlib.metadata import PackageNotFoundError, version

from effattention.constants import Defaults


def tool_version() -> str:
    """Installed version of the package, or "0+unknown" when running from a source tree"""
    try:
        return version(Defaults.TOOL_NAME)
    except PackageNotFoundError:
        return "0+unknown"

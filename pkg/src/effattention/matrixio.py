# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

""" File formats for the effattention library

Matrix files are plain CSV: one matrix row per line, comma-separated decimal values, no header. Values are written
with the shortest representation that round-trips to the same 64-bit float. Sample manifests and reports are JSON.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from effattention.Exceptions import ManifestException, MatrixFileException
from effattention.linalg import Matrix, Vector
from effattention.tolerance import Tolerance

logger = logging.getLogger(__name__)


def format_float(x: float) -> str:
    return repr(float(x))


def read_matrix(path: str) -> Matrix:
    """Read a CSV matrix file

    Blank lines are skipped. Every other line must have the same number of finite values.

    Raises:
        MatrixFileException
    """
    rows: List[List[float]] = []
    width: Optional[int] = None
    try:
        with open(path, newline="") as f:
            for line_number, row in enumerate(csv.reader(f), start=1):
                if not row or all(not cell.strip() for cell in row):
                    continue
                try:
                    values = [float(cell) for cell in row]
                except ValueError as e:
                    raise MatrixFileException(f"not a number ({str(e)})", path, line_number)
                if not all(np.isfinite(values)):
                    raise MatrixFileException("NaN or Inf value", path, line_number)
                if width is None:
                    width = len(values)
                elif len(values) != width:
                    raise MatrixFileException(f"expected {width:d} values, got {len(values):d}", path, line_number)
                rows.append(values)
    except OSError as e:
        raise MatrixFileException(f"cannot read file ({e.strerror})", path)

    if not rows:
        raise MatrixFileException("file contains no rows", path)
    logger.debug(f"Read {len(rows):d}x{width:d} matrix from {path}")
    return np.array(rows, dtype=np.float64)


def read_vector(path: str) -> Vector:
    """Read a single-column CSV file as a vector

    Raises:
        MatrixFileException
    """
    m = read_matrix(path)
    if m.shape[1] != 1:
        raise MatrixFileException(f"expected a single column, got {m.shape[1]:d}", path)
    return m[:, 0]


def matrix_to_csv(m: Any) -> str:
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    return "".join(",".join(format_float(x) for x in row) + "\n" for row in m)


def write_matrix(path: str, m: Any) -> None:
    with open(path, "w", newline="") as f:
        f.write(matrix_to_csv(m))
    logger.debug(f"Wrote matrix to {path}")


def to_json(document: Dict[str, Any]) -> str:
    """Serialise a report document: keys sorted, two-space indent, trailing newline"""
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def write_text(path: str, text: str) -> None:
    with open(path, "w", newline="") as f:
        f.write(text)
    logger.debug(f"Wrote {path}")


def _is_plain_name(entry_id: str) -> bool:
    # Entry ids name output files inside OUT_DIR
    return bool(entry_id) and ".." not in entry_id and not any(sep in entry_id for sep in ("/", "\\"))


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    a_path: str
    t_path: str


@dataclass
class SampleManifest:
    """A list of (attention, hidden states) file pairs with an optional tolerance override

    The JSON document looks like::

        {
          "entries": [{"id": "s1", "a_path": "s1.a.csv", "t_path": "s1.t.csv"}],
          "tolerance": {"check_abs": 1e-8}
        }

    Relative paths are resolved against the directory holding the manifest.
    """

    entries: List[ManifestEntry] = field(default_factory=list)
    tolerance: Optional[Dict[str, float]] = None

    def resolve_tolerance(self, base: Tolerance) -> Tolerance:
        """Apply the manifest override on top of base

        Raises:
            InvalidToleranceException
            TypeError
        """
        if not self.tolerance:
            return base
        return Tolerance.from_mapping(self.tolerance, base)

    @classmethod
    def load(cls, path: str) -> SampleManifest:
        """Load and validate a manifest: ids unique, referenced files present

        Raises:
            ManifestException
        """
        try:
            with open(path) as f:
                document = json.load(f)
        except OSError as e:
            raise ManifestException(f"{path}: cannot read manifest ({e.strerror})")
        except json.JSONDecodeError as e:
            raise ManifestException(f"{path}:{e.lineno:d}: invalid JSON ({e.msg})")

        if not isinstance(document, dict) or not isinstance(document.get("entries"), list):
            raise ManifestException(f"{path}: manifest must be an object with an 'entries' list")
        tolerance = document.get("tolerance")
        if tolerance is not None and not isinstance(tolerance, dict):
            raise ManifestException(f"{path}: 'tolerance' must be an object")

        root = os.path.dirname(os.path.abspath(path))
        entries: List[ManifestEntry] = []
        seen = set()
        for index, raw in enumerate(document["entries"]):
            if not isinstance(raw, dict) or not all(isinstance(raw.get(k), str) for k in ("id", "a_path", "t_path")):
                raise ManifestException(f"{path}: entry {index:d} needs string fields id, a_path and t_path")
            if not _is_plain_name(raw["id"]):
                raise ManifestException(f"{path}: entry id {raw['id']!r} must be a plain file name")
            if raw["id"] in seen:
                raise ManifestException(f"{path}: duplicate id {raw['id']!r}")
            seen.add(raw["id"])
            entry = ManifestEntry(
                id=raw["id"],
                a_path=os.path.join(root, raw["a_path"]),
                t_path=os.path.join(root, raw["t_path"]),
            )
            for file_path in (entry.a_path, entry.t_path):
                if not os.path.isfile(file_path):
                    raise ManifestException(f"{path}: entry {entry.id!r} references missing file {file_path}")
            entries.append(entry)
        logger.info(f"Loaded manifest {path} with {len(entries):d} entries")
        return cls(entries=entries, tolerance=tolerance)

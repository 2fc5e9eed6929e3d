# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

""" Command line interface for the effattention library

    effattention [-v] [--rank-rel X] [--check-abs X] COMMAND ...

Commands write matrices as CSV and summaries as JSON on standard output. Exit codes are listed in
effattention.constants.ExitCode.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from effattention.adversarial import generate_adversarial
from effattention.attention import (
    as_attention,
    decompose,
    effective_attention_brunner,
    efficient_attention,
    identifiability,
    prediction_error,
    validate_distribution,
)
from effattention.constants import Defaults, Experiment, ExitCode
from effattention.decorators import EXIT_CODES, command
from effattention.harness import ExperimentConfig, run_experiment
from effattention.linalg import Matrix
from effattention.matrixio import SampleManifest, read_matrix, read_vector, to_json, write_matrix, write_text
from effattention.metrics import compare_predictions
from effattention.tolerance import Tolerance
from effattention.version import tool_version

logger = logging.getLogger(__name__)


def resolve_tolerance(args: argparse.Namespace, manifest: Optional[SampleManifest] = None) -> Tolerance:
    """Environment variable first, then the manifest override, then the command line flags

    Raises:
        InvalidToleranceException
        TypeError
    """
    tolerance = Tolerance.from_environment()
    if manifest is not None:
        tolerance = manifest.resolve_tolerance(tolerance)
    flags = {k: v for k, v in (("rank_rel", args.rank_rel), ("check_abs", args.check_abs)) if v is not None}
    if flags:
        tolerance = Tolerance.from_mapping(flags, tolerance)
    logger.debug(f"Using {tolerance}")
    return tolerance


def _header(tolerance: Tolerance) -> Dict[str, Any]:
    return {"tool": Defaults.TOOL_NAME, "version": tool_version(), "tolerance": tolerance.to_dict()}


def _emit(document: Dict[str, Any]) -> None:
    sys.stdout.write(to_json(document))


def _projection_summary(a: Matrix, a_eff: Matrix, t: Matrix) -> Dict[str, Any]:
    return {
        "row_sum_max_error": float(np.max(np.abs(a_eff.sum(axis=1) - 1.0))),
        "min_entry": float(a_eff.min()),
        "prediction_error": prediction_error(a, a_eff, t),
    }


@command
def cmd_project(args: argparse.Namespace) -> int:
    tolerance = resolve_tolerance(args)
    a = as_attention(read_matrix(args.a_path), tolerance)
    t = read_matrix(args.t_path)
    a_eff = efficient_attention(a, t, tolerance, strict_positivity=args.strict_positivity)
    write_matrix(args.out_path, a_eff)
    _emit({**_header(tolerance), **_projection_summary(a, a_eff, t)})
    return ExitCode.SUCCESS


@command
def cmd_brunner(args: argparse.Namespace) -> int:
    tolerance = resolve_tolerance(args)
    a = read_matrix(args.a_path)
    t = read_matrix(args.t_path)
    out = effective_attention_brunner(a, t, tolerance)
    write_matrix(args.out_path, out)
    violations = validate_distribution(out, tolerance)
    if violations:
        logger.warning(f"Effective attention violates the simplex in {len(violations):d} place(s)")
    _emit(
        {
            **_header(tolerance),
            **_projection_summary(a, out, t),
            "violations": [v.to_dict() for v in violations],
        }
    )
    return ExitCode.SUCCESS


@command
def cmd_decompose(args: argparse.Namespace) -> int:
    tolerance = resolve_tolerance(args)
    a = read_matrix(args.a_path)
    t = read_matrix(args.t_path)
    decomposition = decompose(a, t, tolerance)
    write_matrix(args.perp_path, decomposition.a_perp)
    write_matrix(args.sharp_path, decomposition.a_sharp)
    _emit(
        {
            **_header(tolerance),
            "reconstruction_error": float(np.max(np.abs(decomposition.a_perp + decomposition.a_sharp - a))),
            "sharp_norm": float(np.linalg.norm(decomposition.a_sharp)),
        }
    )
    return ExitCode.SUCCESS


@command
def cmd_check(args: argparse.Namespace) -> int:
    tolerance = resolve_tolerance(args)
    verdict = identifiability(read_matrix(args.t_path), args.dv, tolerance)
    _emit({**_header(tolerance), **verdict.to_dict()})
    return ExitCode.SUCCESS if verdict.stochastic_identifiable else ExitCode.NOT_IDENTIFIABLE


@command
def cmd_adversarial(args: argparse.Namespace) -> int:
    tolerance = resolve_tolerance(args)
    a = read_matrix(args.a_path)
    t = read_matrix(args.t_path)
    sample = generate_adversarial(a, t, args.seed, tolerance)
    write_matrix(args.out_path, sample.adversarial)

    a_eff = efficient_attention(a, t, tolerance)
    adversarial_eff = efficient_attention(sample.adversarial, t, tolerance)
    sidecar = {
        **_header(tolerance),
        **sample.to_dict(),
        "seed": args.seed,
        "prediction_error": prediction_error(a, sample.adversarial, t),
        "efficient_attention_gap": float(np.max(np.abs(a_eff - adversarial_eff))),
    }
    write_text(args.out_path + ".json", to_json(sidecar))
    _emit(sidecar)
    return ExitCode.SUCCESS


@command
def cmd_experiment(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        n_samples=args.n,
        d_s=args.ds,
        d=args.d,
        d_v=args.dv,
        d_q=args.dq,
        seed=args.seed,
        tolerance=resolve_tolerance(args),
        renormalize_complement=args.renormalize_complement,
        workers=args.workers,
        label=args.label,
    )
    report = run_experiment(args.name, config)
    write_text(args.out_prefix + ".json", report.to_json())
    write_text(args.out_prefix + ".csv", report.to_csv())
    _emit(report.to_dict())
    return ExitCode.SUCCESS


@command
def cmd_metrics(args: argparse.Namespace) -> int:
    report = compare_predictions(read_vector(args.p_path), read_vector(args.q_path))
    _emit({"tool": Defaults.TOOL_NAME, "version": tool_version(), **report.to_dict()})
    return ExitCode.SUCCESS


def _batch_entry(entry_id: str, a_path: str, t_path: str, out_dir: str, tolerance: Tolerance) -> Dict[str, Any]:
    try:
        a = as_attention(read_matrix(a_path), tolerance)
        t = read_matrix(t_path)
        a_eff = efficient_attention(a, t, tolerance)
        write_matrix(os.path.join(out_dir, f"{entry_id}.eff.csv"), a_eff)
    except Exception as e:
        code = next((c for cls, c in EXIT_CODES if isinstance(e, cls)), ExitCode.INPUT_ERROR)
        logger.error(f"Entry {entry_id!r} failed: {str(e)}")
        return {"id": entry_id, "status": code, "error": str(e)}
    return {"id": entry_id, "status": ExitCode.SUCCESS, **_projection_summary(a, a_eff, t)}


@command
def cmd_batch(args: argparse.Namespace) -> int:
    manifest = SampleManifest.load(args.manifest)
    tolerance = resolve_tolerance(args, manifest)
    os.makedirs(args.out_dir, exist_ok=True)

    results = [_batch_entry(e.id, e.a_path, e.t_path, args.out_dir, tolerance) for e in manifest.entries]
    summary = {**_header(tolerance), "entries": results}
    write_text(os.path.join(args.out_dir, "summary.json"), to_json(summary))
    _emit(summary)

    statuses = {r["status"] for r in results}
    if ExitCode.VALIDATION_FAILURE in statuses:
        return ExitCode.VALIDATION_FAILURE
    if statuses - {ExitCode.SUCCESS}:
        return ExitCode.INPUT_ERROR
    return ExitCode.SUCCESS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=Defaults.TOOL_NAME,
        description="Efficient attention: identifiable, prediction-preserving projections of attention matrices",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging")
    parser.add_argument("--rank-rel", type=float, default=None, help="Relative threshold for rank decisions")
    parser.add_argument("--check-abs", type=float, default=None, help="Absolute threshold for invariant checks")
    subparsers = parser.add_subparsers(dest="command", required=True)

    project = subparsers.add_parser("project", help="Write the efficient attention of A")
    project.add_argument("a_path", help="Attention matrix CSV")
    project.add_argument("t_path", help="Hidden states CSV")
    project.add_argument("out_path", help="Output CSV")
    project.add_argument(
        "--strict-positivity", action="store_true", help="Fail when the projection has negative weights"
    )
    project.set_defaults(handler=cmd_project)

    brunner = subparsers.add_parser("brunner", help="Write the effective attention baseline of A")
    brunner.add_argument("a_path", help="Attention matrix CSV")
    brunner.add_argument("t_path", help="Hidden states CSV")
    brunner.add_argument("out_path", help="Output CSV")
    brunner.set_defaults(handler=cmd_brunner)

    decomposition = subparsers.add_parser("decompose", help="Split A into its efficient and kernel parts")
    decomposition.add_argument("a_path", help="Attention matrix CSV")
    decomposition.add_argument("t_path", help="Hidden states CSV")
    decomposition.add_argument("perp_path", help="Output CSV for the efficient part")
    decomposition.add_argument("sharp_path", help="Output CSV for the kernel part")
    decomposition.set_defaults(handler=cmd_decompose)

    check = subparsers.add_parser("check", help="Decide identifiability of attention for hidden states T")
    check.add_argument("t_path", help="Hidden states CSV")
    check.add_argument("--dv", type=int, default=None, help="Value dimension (defaults to the column count of T)")
    check.set_defaults(handler=cmd_check)

    adversarial = subparsers.add_parser("adversarial", help="Write a prediction-equivalent adversarial of A")
    adversarial.add_argument("a_path", help="Attention matrix CSV")
    adversarial.add_argument("t_path", help="Hidden states CSV")
    adversarial.add_argument("out_path", help="Output CSV, a JSON sidecar is written next to it")
    adversarial.add_argument("--seed", type=int, default=0, help="Seed for the kernel directions")
    adversarial.set_defaults(handler=cmd_adversarial)

    experiment = subparsers.add_parser("experiment", help="Run a synthetic experiment")
    experiment.add_argument(
        "name",
        choices=[Experiment.PREDICTION_PRESERVATION, Experiment.ADVERSARIAL, Experiment.COMPLEMENT],
        help="1: prediction preservation, 2: kernel adversarials, 3: complement attention",
    )
    experiment.add_argument("out_prefix", help="Reports are written to OUT_PREFIX.json and OUT_PREFIX.csv")
    experiment.add_argument("--ds", type=int, default=8, help="Sequence length d_s")
    experiment.add_argument("--d", type=int, default=4, help="Embedding dimension d")
    experiment.add_argument("--dv", type=int, default=2, help="Value dimension d_v")
    experiment.add_argument("--dq", type=int, default=4, help="Query/key dimension d_q")
    experiment.add_argument("--n", type=int, default=100, help="Number of samples")
    experiment.add_argument("--seed", type=int, default=0, help="Master seed")
    experiment.add_argument("--workers", type=int, default=1, help="Threads evaluating samples")
    experiment.add_argument("--label", default="synthetic", help="Dataset label in the report")
    experiment.add_argument(
        "--renormalize-complement",
        action="store_true",
        help="Project (1 - A) / (d_s - 1) instead of 1 - A in experiment 3",
    )
    experiment.set_defaults(handler=cmd_experiment)

    metrics = subparsers.add_parser("metrics", help="Compare two single-column prediction files")
    metrics.add_argument("p_path", help="Reference predictions CSV")
    metrics.add_argument("q_path", help="Compared predictions CSV")
    metrics.set_defaults(handler=cmd_metrics)

    batch = subparsers.add_parser("batch", help="Project every entry of a sample manifest")
    batch.add_argument("manifest", help="Sample manifest JSON")
    batch.add_argument("out_dir", help="Directory for <id>.eff.csv files and summary.json")
    batch.set_defaults(handler=cmd_batch)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the effattention console script

    Returns:
        int: The exit code
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad flags and 0 on --help
        return int(e.code or 0) if not isinstance(e.code, str) else ExitCode.INPUT_ERROR

    levels: List[int] = [logging.WARNING, logging.INFO, logging.DEBUG]
    logging.basicConfig(level=levels[min(args.verbose, 2)], format="%(levelname)s %(name)s: %(message)s")
    return int(args.handler(args))


if __name__ == "__main__":
    sys.exit(main())

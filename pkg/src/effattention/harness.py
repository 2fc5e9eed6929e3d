# Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

""" Synthetic attention model and experiment runners for the effattention library

The model is a single attention head with fixed random weights:

    T = E.W_V.H,  A = softmax(E.W_Q.(E.W_K)' / sqrt(d_q)),  prediction = logistic(w . mean_rows(A.T) + b)

Three experiments are provided:

    1. predictions of A and of its efficient attention agree
    2. a kernel adversarial of A has the same efficient attention and the same prediction
    3. the complement 1 - A has a different efficient attention and a different prediction

Samples may be evaluated on several threads; aggregation is always in sample-index order so reports do not depend on
the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, TypeVar

import numpy as np
from scipy.special import expit, softmax

from effattention.adversarial import complement_attention, generate_adversarial
from effattention.attention import efficient_attention, identifiability
from effattention.constants import Defaults, Experiment, MetricName
from effattention.Exceptions import DegenerateException, DimensionMismatchException, IdentifiableException
from effattention.linalg import Matrix, Vector
from effattention.metrics import compare_predictions, l2_rel, l2_scaled, mean_wasserstein_matrices
from effattention.metrics import wasserstein1_predictions
from effattention.tolerance import DEFAULT_TOLERANCE, Tolerance
from effattention.version import tool_version

logger = logging.getLogger(__name__)

_R = TypeVar("_R")


@dataclass(frozen=True)
class ModelParams:
    """Weights of the synthetic single-head model"""

    d_s: int
    d: int
    d_v: int
    d_q: int
    e: Matrix
    w_v: Matrix
    h: Matrix
    w_q: Matrix
    w_k: Matrix
    decoder_w: Vector
    decoder_b: float
    seed: int


@dataclass(frozen=True)
class SampleOutcome:
    a: Matrix
    t: Matrix
    prediction: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration shared by the three experiment runners"""

    n_samples: int
    d_s: int
    d: int
    d_v: int
    d_q: int
    seed: int
    tolerance: Tolerance = DEFAULT_TOLERANCE
    renormalize_complement: bool = False
    workers: int = 1
    label: str = "synthetic"

    def __post_init__(self) -> None:
        for name in ("n_samples", "d_s", "d", "d_v", "d_q", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer")
            if value < 1:
                raise DimensionMismatchException(f"{name} must be at least 1, got {value:d}")
        if self.seed < 0:
            raise DimensionMismatchException(f"seed must be nonnegative, got {self.seed:d}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_samples": self.n_samples,
            "d_s": self.d_s,
            "d": self.d,
            "d_v": self.d_v,
            "d_q": self.d_q,
            "seed": self.seed,
            "tolerance": self.tolerance.to_dict(),
            "renormalize_complement": self.renormalize_complement,
            "label": self.label,
        }


@dataclass
class ExperimentReport:
    """Aggregate metrics of one experiment run, laid out like a results table row"""

    dataset_label: str
    n_samples: int
    metrics: Dict[str, float] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset_label": self.dataset_label,
            "n_samples": self.n_samples,
            "metrics": dict(self.metrics),
            "metadata": dict(self.metadata),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["dataset", "n_samples"] + list(self.metrics))
        writer.writerow([self.dataset_label, self.n_samples] + [repr(float(v)) for v in self.metrics.values()])
        return buffer.getvalue()


@dataclass(frozen=True)
class SweepRow:
    d_s: int
    d_v: int
    rank_t1: int
    kernel_dim: int


def synth_model(d_s: int, d: int, d_v: int, d_q: int, seed: int) -> ModelParams:
    """Draw the weights of a synthetic model from a PCG64 stream seeded with seed

    Every weight is Gaussian with variance 1 / fan_in: E with fan-in d (unit expected embedding norm), W_V, W_Q, W_K
    and the decoder weight with fan-in d, H with fan-in d_v. The decoder bias is standard normal. The draw order is
    fixed, so the same arguments give bit-identical parameters on every platform.

    Raises:
        DimensionMismatchException
    """
    for name, value in (("d_s", d_s), ("d", d), ("d_v", d_v), ("d_q", d_q)):
        if value < 1:
            raise DimensionMismatchException(f"{name} must be at least 1, got {value:d}")

    rng = np.random.Generator(np.random.PCG64(seed))
    scale_d = 1.0 / np.sqrt(d)
    return ModelParams(
        d_s=d_s,
        d=d,
        d_v=d_v,
        d_q=d_q,
        e=rng.standard_normal((d_s, d)) * scale_d,
        w_v=rng.standard_normal((d, d_v)) * scale_d,
        h=rng.standard_normal((d_v, d)) / np.sqrt(d_v),
        w_q=rng.standard_normal((d, d_q)) * scale_d,
        w_k=rng.standard_normal((d, d_q)) * scale_d,
        decoder_w=rng.standard_normal(d) * scale_d,
        decoder_b=float(rng.standard_normal()),
        seed=int(seed),
    )


def hidden_states(params: ModelParams) -> Matrix:
    return params.e @ params.w_v @ params.h


def decode(params: ModelParams, a: Matrix, t: Matrix) -> float:
    """The decoder alone: logistic(w . mean_rows(A.T) + b), so A can be substituted"""
    return float(expit(params.decoder_w @ (a @ t).mean(axis=0) + params.decoder_b))


def forward(params: ModelParams) -> SampleOutcome:
    """Run the synthetic model: hidden states, softmax attention and the decoded prediction"""
    t = hidden_states(params)
    scores = (params.e @ params.w_q) @ (params.e @ params.w_k).T / np.sqrt(params.d_q)
    a = softmax(scores, axis=1)
    return SampleOutcome(a=a, t=t, prediction=decode(params, a, t))


def _sample_seeds(config: ExperimentConfig) -> np.ndarray:
    # Column 0 seeds the model, column 1 the adversarial directions
    state = np.random.SeedSequence(config.seed).generate_state(2 * config.n_samples, dtype=np.uint64)
    return state.reshape(config.n_samples, 2)


def _map_ordered(func: Callable[[int], _R], config: ExperimentConfig) -> List[_R]:
    indices = range(config.n_samples)
    if config.workers == 1:
        return [func(i) for i in indices]
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        return list(executor.map(func, indices))


def _metadata(experiment: str, config: ExperimentConfig) -> Dict[str, Any]:
    return {
        "tool": Defaults.TOOL_NAME,
        "version": tool_version(),
        "experiment": experiment,
        "prng": Defaults.PRNG,
        "config": config.to_dict(),
        "ground_metric": Defaults.GROUND_METRIC,
        "l2_scaled_normalization": Defaults.L2_SCALED_NORMALIZATION,
    }


def _prediction_metrics(p: Sequence[float], q: Sequence[float]) -> Dict[str, float]:
    report = compare_predictions(p, q)
    metrics = {MetricName.WASSERSTEIN: report.wasserstein, MetricName.RMSE: report.rmse, MetricName.MSE: report.mse}
    if report.r2 is not None:
        metrics[MetricName.R2] = report.r2
    if report.l2_rel is not None:
        metrics[MetricName.L2_REL] = report.l2_rel
    metrics[MetricName.L2_SCALED] = report.l2_scaled
    return metrics


@dataclass(frozen=True)
class PreservationRecord:
    a: Matrix
    a_eff: Matrix
    p_a: float
    p_eff: float


def preservation_sample(params: ModelParams, tol: Tolerance = DEFAULT_TOLERANCE) -> PreservationRecord:
    """One sample of experiment 1: the prediction of A and of its efficient attention"""
    outcome = forward(params)
    a_eff = efficient_attention(outcome.a, outcome.t, tol)
    return PreservationRecord(a=outcome.a, a_eff=a_eff, p_a=outcome.prediction, p_eff=decode(params, a_eff, outcome.t))


def run_experiment1(config: ExperimentConfig) -> ExperimentReport:
    """Compare predictions generated by attention matrices and by their efficient attention

    Raises:
        GuaranteeViolationException
    """
    logger.info(f"Running experiment 1 on {config.n_samples:d} samples")
    seeds = _sample_seeds(config)
    records = _map_ordered(
        lambda i: preservation_sample(
            synth_model(config.d_s, config.d, config.d_v, config.d_q, int(seeds[i, 0])), config.tolerance
        ),
        config,
    )

    metrics = _prediction_metrics([r.p_a for r in records], [r.p_eff for r in records])
    a = np.stack([r.a for r in records])
    a_eff = np.stack([r.a_eff for r in records])
    metrics[MetricName.MEAN_ROW_WASSERSTEIN] = mean_wasserstein_matrices(a, a_eff, check=False)
    metrics["matrix_l2_rel"] = l2_rel(a, a_eff)
    metrics["matrix_l2_scaled"] = l2_scaled(a, a_eff)
    return ExperimentReport(
        dataset_label=config.label,
        n_samples=config.n_samples,
        metrics=metrics,
        metadata=_metadata(Experiment.PREDICTION_PRESERVATION, config),
    )


@dataclass(frozen=True)
class AdversarialRecord:
    a_eff: Matrix
    a_adv_eff: Matrix
    p_a: float
    p_adv: float
    p_eff: float
    p_adv_eff: float
    row_wasserstein_raw: float
    linf_gap: float


def adversarial_sample(
    params: ModelParams, adversarial_seed: int, tol: Tolerance = DEFAULT_TOLERANCE
) -> AdversarialRecord:
    """One sample of experiment 2: A, a kernel adversarial of A, and both efficient projections

    Raises:
        IdentifiableException
        DegenerateException
    """
    outcome = forward(params)
    sample = generate_adversarial(outcome.a, outcome.t, adversarial_seed, tol)
    a_eff = efficient_attention(outcome.a, outcome.t, tol)
    a_adv_eff = efficient_attention(sample.adversarial, outcome.t, tol)
    return AdversarialRecord(
        a_eff=a_eff,
        a_adv_eff=a_adv_eff,
        p_a=outcome.prediction,
        p_adv=decode(params, sample.adversarial, outcome.t),
        p_eff=decode(params, a_eff, outcome.t),
        p_adv_eff=decode(params, a_adv_eff, outcome.t),
        row_wasserstein_raw=mean_wasserstein_matrices(outcome.a, sample.adversarial),
        linf_gap=sample.linf_gap,
    )


def run_experiment2(config: ExperimentConfig) -> ExperimentReport:
    """Compare the efficient attention of attention matrices and of their kernel adversarials

    Raises:
        IdentifiableException
        DegenerateException
        GuaranteeViolationException
    """
    if config.d_s <= min(config.d, config.d_v) + 1:
        message = (
            f"d_s={config.d_s:d} does not exceed min(d, d_v) + 1 = {min(config.d, config.d_v) + 1:d}: "
            "attention is identifiable, no adversarial exists"
        )
        logger.error(message)
        raise IdentifiableException(message)

    logger.info(f"Running experiment 2 on {config.n_samples:d} samples")
    seeds = _sample_seeds(config)
    records = _map_ordered(
        lambda i: adversarial_sample(
            synth_model(config.d_s, config.d, config.d_v, config.d_q, int(seeds[i, 0])),
            int(seeds[i, 1]),
            config.tolerance,
        ),
        config,
    )

    p_a = [r.p_a for r in records]
    p_adv = [r.p_adv for r in records]
    p_eff = [r.p_eff for r in records]
    p_adv_eff = [r.p_adv_eff for r in records]
    a_eff = np.stack([r.a_eff for r in records])
    a_adv_eff = np.stack([r.a_adv_eff for r in records])

    metrics = {MetricName.MEAN_ROW_WASSERSTEIN: mean_wasserstein_matrices(a_eff, a_adv_eff, check=False)}
    metrics.update(_prediction_metrics(p_eff, p_adv_eff))
    metrics.update(
        {
            "matrix_l2_rel": l2_rel(a_eff, a_adv_eff),
            "matrix_l2_scaled": l2_scaled(a_eff, a_adv_eff),
            "mean_row_wasserstein_raw": float(np.mean([r.row_wasserstein_raw for r in records])),
            "min_linf_gap": float(min(r.linf_gap for r in records)),
            "max_prediction_gap": float(np.max(np.abs(np.array(p_a) - np.array(p_adv)))),
        }
    )
    # Every prediction metric for the remaining pairs, keyed <metric>_<pair>
    for pair, (p, q) in (("a_a_eff", (p_a, p_eff)), ("a_adv", (p_a, p_adv)), ("adv_adv_eff", (p_adv, p_adv_eff))):
        metrics.update({f"{name}_{pair}": value for name, value in _prediction_metrics(p, q).items()})
    return ExperimentReport(
        dataset_label=config.label,
        n_samples=config.n_samples,
        metrics=metrics,
        metadata=_metadata(Experiment.ADVERSARIAL, config),
    )


@dataclass(frozen=True)
class ComplementRecord:
    a_eff: Matrix
    complement_eff: Matrix
    p_a: float
    p_eff: float
    p_complement_eff: float
    row_wasserstein: float
    negative_rows: int


def complement_sample(
    params: ModelParams, tol: Tolerance = DEFAULT_TOLERANCE, renormalize: bool = False
) -> ComplementRecord:
    """One sample of experiment 3: efficient attention of A and of 1 - A, and their predictions

    The complement is projected as 1 - A unless renormalize is set. For the row-wise comparison its efficient
    attention is always scaled to unit row mass.

    Raises:
        DegenerateException
    """
    if params.d_s < 2:
        raise DegenerateException("The complement experiment needs d_s >= 2")
    outcome = forward(params)
    a_eff = efficient_attention(outcome.a, outcome.t, tol)
    complement_eff = efficient_attention(complement_attention(outcome.a, renormalize=renormalize), outcome.t, tol)
    comparable = complement_eff if renormalize else complement_eff / (params.d_s - 1)
    negative_rows = int(np.sum(a_eff.min(axis=1) < -tol.check_abs) + np.sum(comparable.min(axis=1) < -tol.check_abs))
    return ComplementRecord(
        a_eff=a_eff,
        complement_eff=comparable,
        p_a=outcome.prediction,
        p_eff=decode(params, a_eff, outcome.t),
        p_complement_eff=decode(params, complement_eff, outcome.t),
        row_wasserstein=mean_wasserstein_matrices(a_eff, comparable, check=False),
        negative_rows=negative_rows,
    )


def run_experiment3(config: ExperimentConfig) -> ExperimentReport:
    """Compare the efficient attention of attention matrices and of their complements 1 - A

    distinct_fraction is the share of samples with distinct efficient matrices (row Wasserstein above 1e-3) whose
    predictions also differ by more than 1e-6. It is 1.0 when no sample has distinct efficient matrices.

    Raises:
        DegenerateException
        GuaranteeViolationException
    """
    logger.info(f"Running experiment 3 on {config.n_samples:d} samples")
    seeds = _sample_seeds(config)
    records = _map_ordered(
        lambda i: complement_sample(
            synth_model(config.d_s, config.d, config.d_v, config.d_q, int(seeds[i, 0])),
            config.tolerance,
            config.renormalize_complement,
        ),
        config,
    )

    p_a = [r.p_a for r in records]
    p_eff = [r.p_eff for r in records]
    p_complement = [r.p_complement_eff for r in records]
    distinct = [r for r in records if r.row_wasserstein > Defaults.DISTINCT_ROW_WASSERSTEIN]
    separated = [r for r in distinct if abs(r.p_eff - r.p_complement_eff) > Defaults.DISTINCT_PREDICTION]
    if not distinct:
        logger.warning("No sample has distinct efficient matrices, distinct_fraction set to 1.0")

    metrics = {MetricName.MEAN_ROW_WASSERSTEIN: float(np.mean([r.row_wasserstein for r in records]))}
    metrics.update(_prediction_metrics(p_eff, p_complement))
    metrics.update(
        {
            "reference_wasserstein": wasserstein1_predictions(p_a, p_eff),
            "n_distinct": float(len(distinct)),
            "distinct_fraction": len(separated) / len(distinct) if distinct else 1.0,
            "negative_rows": float(sum(r.negative_rows for r in records)),
        }
    )
    return ExperimentReport(
        dataset_label=config.label,
        n_samples=config.n_samples,
        metrics=metrics,
        metadata=_metadata(Experiment.COMPLEMENT, config),
    )


RUNNERS: Dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    Experiment.PREDICTION_PRESERVATION: run_experiment1,
    Experiment.ADVERSARIAL: run_experiment2,
    Experiment.COMPLEMENT: run_experiment3,
}


def kernel_dimension_sweep(
    d_s_values: Sequence[int], seed: int, d_q: int = 2, tol: Tolerance = DEFAULT_TOLERANCE
) -> Iterator[SweepRow]:
    """Kernel dimension of [T,1]' for every d_s in d_s_values and every d_v in 1..d_s

    d is set to d_s so that rank(T) = d_v for generic weights.
    """
    for d_s in d_s_values:
        for d_v in range(1, d_s + 1):
            params = synth_model(d_s, d_s, d_v, d_q, seed + 1000 * d_s + d_v)
            verdict = identifiability(hidden_states(params), d_v, tol)
            yield SweepRow(d_s=d_s, d_v=d_v, rank_t1=verdict.rank_t1, kernel_dim=verdict.kernel_dim)


def run_experiment(name: str, config: ExperimentConfig, runners: Optional[Dict[str, Any]] = None) -> ExperimentReport:
    """Dispatch to the runner registered for name ("1", "2" or "3")

    Raises:
        KeyError
    """
    runners = RUNNERS if runners is None else runners
    if name not in runners:
        raise KeyError(f"Unknown experiment {name!r}, expected one of {', '.join(sorted(runners))}")
    return runners[name](config)

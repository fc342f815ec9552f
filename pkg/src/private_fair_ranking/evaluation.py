"""Experiment harness: the three pipelines and the plaintext measurement ledger.

The ledger here is the only place plaintext aggregates exist. It observes the
private run from outside (via :class:`protocol.RerankObserver`) and is never
read by the protocol.
"""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import astuple, dataclass, field, fields
from typing import List, Optional, Sequence, Tuple

import numpy as np
from opentelemetry import trace

from .config import ExperimentConfig
from .fairness import RelevanceProfile, attention_weights, ndcg, unfairness
from .protocol import SequenceResult, run_sequence
from .ring import FixedPointCodec, ring_add_array, ring_sub_array
from .solver import Reranking, problem_for_profile, solve

logger = logging.getLogger(__name__)

NDCG_SLACK = 1e-9


class EvaluationLedger:
    """Plaintext A and R plus per-user NDCG.

    With a codec, A and R accumulate as fixed-point words exactly like the
    servers' shares do, so noise-free comparisons against the private run
    are exact rather than approximate.
    """

    def __init__(self, n: int, codec: Optional[FixedPointCodec] = None) -> None:
        self.n = n
        self.codec = codec
        self._a = np.zeros(n, dtype=np.uint64 if codec else np.float64)
        self._r = np.zeros(n, dtype=np.uint64 if codec else np.float64)
        self.rerankings: List[Optional[Reranking]] = []
        self.ndcgs: List[float] = []
        self.aborted: List[bool] = []

    @property
    def attention(self) -> np.ndarray:
        return self.codec.decode_array(self._a) if self.codec else self._a.copy()

    @property
    def relevance(self) -> np.ndarray:
        return self.codec.decode_array(self._r) if self.codec else self._r.copy()

    def exposure_gap(self) -> np.ndarray:
        """A - R, computed the way the servers compute it."""
        if self.codec:
            return self.codec.decode_array(ring_sub_array(self._a, self._r))
        return self._a - self._r

    def unfairness(self) -> float:
        return unfairness(self.attention, self.relevance)

    def record(self, profile: RelevanceProfile, reranking: Reranking) -> None:
        w_star = reranking.item_attention(attention_weights(profile.n))
        if self.codec:
            self._a = ring_add_array(self._a, self.codec.encode_array(w_star))
            self._r = ring_add_array(self._r, self.codec.encode_array(profile.normalized))
        else:
            self._a += w_star
            self._r += profile.normalized
        self.rerankings.append(reranking)
        self.ndcgs.append(ndcg(profile.ranking, reranking, profile.normalized))
        self.aborted.append(False)

    def record_abort(self) -> None:
        self.rerankings.append(None)
        self.ndcgs.append(math.nan)
        self.aborted.append(True)


def run_baseline(
    profiles: Sequence[RelevanceProfile], codec: Optional[FixedPointCodec] = None
) -> EvaluationLedger:
    """No fairness: every user sees the relevance order."""
    ledger = EvaluationLedger(profiles[0].n, codec)
    for profile in profiles:
        ledger.record(profile, Reranking(profile.ranking))
    return ledger


def run_centralized(
    profiles: Sequence[RelevanceProfile],
    k: int,
    theta: float,
    codec: Optional[FixedPointCodec] = None,
) -> EvaluationLedger:
    """Fair reranking with a trusted aggregator: exact A - R, no noise."""
    ledger = EvaluationLedger(profiles[0].n, codec)
    for profile in profiles:
        problem, _ = problem_for_profile(ledger.exposure_gap(), profile, theta, k)
        ledger.record(profile, solve(problem))
    return ledger


@dataclass(frozen=True)
class ReportRow:
    """One (epsilon, seed) cell of a sweep."""

    epsilon: float
    seed: int
    unfairness_none: float
    unfairness_central_fair: float
    unfairness_private: float
    mean_ndcg: float
    min_ndcg: float
    aborts: int
    runtime_ms: float

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def outcome(self) -> Tuple:
        """Everything but wall-clock time; equal across repeated seeded runs."""
        return astuple(self)[:-1]


@dataclass(frozen=True)
class TraceRow:
    epsilon: float
    seed: int
    user: int
    ndcg: float
    aborted: bool
    runtime_ms: float

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]


@dataclass
class CellResult:
    row: ReportRow
    traces: List[TraceRow]
    private: SequenceResult


@dataclass
class RunReport:
    rows: List[ReportRow] = field(default_factory=list)
    traces: List[TraceRow] = field(default_factory=list)

    def floor_violations(self, theta: float) -> List[ReportRow]:
        """Rows whose worst reranking fell below the NDCG floor."""
        return [
            row
            for row in self.rows
            if not math.isnan(row.min_ndcg) and row.min_ndcg < theta - NDCG_SLACK
        ]


def run_cell(
    profiles: Sequence[RelevanceProfile],
    config: ExperimentConfig,
    epsilon: float,
    seed: int,
    *,
    baseline: Optional[EvaluationLedger] = None,
    centralized: Optional[EvaluationLedger] = None,
) -> CellResult:
    """Run the three pipelines for one (epsilon, seed).

    The baseline and centralized pipelines do not depend on epsilon or seed,
    so a sweep computes them once and passes them in.
    """
    codec = FixedPointCodec(config.fractional_bits)
    n = profiles[0].n
    k = min(config.depth, n)
    tracer = trace.get_tracer(__name__)

    with tracer.start_as_current_span(
        "experiment_cell",
        attributes={"epsilon": float(epsilon), "seed": int(seed), "users": len(profiles)},
    ) as span:
        baseline = baseline or run_baseline(profiles, codec)
        centralized = centralized or run_centralized(profiles, k, config.theta, codec)

        ledger = EvaluationLedger(n, codec)
        private = run_sequence(profiles, config, epsilon=epsilon, seed=seed, observer=ledger)
        traces = [
            TraceRow(float(epsilon), int(seed), user, value, gone, ms)
            for user, (value, gone, ms) in enumerate(
                zip(ledger.ndcgs, ledger.aborted, private.runtimes_ms)
            )
        ]

        done = [t.ndcg for t in traces if not t.aborted]
        row = ReportRow(
            epsilon=float(epsilon),
            seed=int(seed),
            unfairness_none=baseline.unfairness(),
            unfairness_central_fair=centralized.unfairness(),
            unfairness_private=ledger.unfairness(),
            mean_ndcg=math.fsum(done) / len(done) if done else math.nan,
            min_ndcg=min(done) if done else math.nan,
            aborts=private.aborts,
            runtime_ms=statistics.fmean(private.runtimes_ms),
        )
        span.set_attribute("unfairness_private", row.unfairness_private)
        span.set_attribute("aborts", row.aborts)

    logger.info(
        "cell epsilon=%s seed=%s: none=%.4f central=%.4f private=%.4f "
        "min_ndcg=%.4f aborts=%s budget=%.6g/%s",
        epsilon, seed, row.unfairness_none, row.unfairness_central_fair,
        row.unfairness_private, row.min_ndcg, row.aborts,
        private.epsilon_spent, epsilon,
    )
    return CellResult(row=row, traces=traces, private=private)


def run_sweep(
    profiles: Sequence[RelevanceProfile], config: ExperimentConfig
) -> RunReport:
    """Every (epsilon, seed) cell of the configured sweep, epsilon-major."""
    codec = FixedPointCodec(config.fractional_bits)
    k = min(config.depth, profiles[0].n)
    baseline = run_baseline(profiles, codec)
    centralized = run_centralized(profiles, k, config.theta, codec)
    logger.info(
        "sweep: n=%s users=%s k=%s theta=%s epsilons=%s seeds=%s",
        profiles[0].n, len(profiles), k, config.theta, config.epsilons, config.seeds,
    )

    report = RunReport()
    for epsilon in config.epsilons:
        for seed in config.seeds:
            cell = run_cell(
                profiles, config, epsilon, seed,
                baseline=baseline, centralized=centralized,
            )
            report.rows.append(cell.row)
            report.traces.extend(cell.traces)
    return report

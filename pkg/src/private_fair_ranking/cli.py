"""Command-line entry point: ``private-fair-ranking {run,verify-solver,noise-audit}``.

Exit codes: 0 success, 1 invalid configuration, 2 unreadable input or
unwritable output, 3 a checked invariant failed.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError
from scipy import stats

from ._version import __version__
from .config import ExperimentConfig, TelemetryConfig
from .data_io import (
    RelevanceMatrix,
    load_relevance_csv,
    synth_relevance,
    write_report_csv,
    write_trace_csv,
)
from .errors import (
    ConfigurationError,
    IngestionError,
    ParameterError,
    ReportError,
    SolverError,
)
from .evaluation import RunReport, run_sweep
from .fairness import RatingScale
from .mpc import pi_lap, reveal_to_client
from .protocol import party_generators
from .ring import FixedPointCodec
from .solver import (
    BRUTE_FORCE_MAX_N,
    ScalingMode,
    brute_force,
    random_problem,
    solve,
)
from .telemetry import Telemetry
from .transport import create_transport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_INVARIANT = 3

VERIFY_MAX_N = 7
VERIFY_THETAS = (0.0, 0.8, 1.0)
COST_ATOL = 1e-9
AUDIT_MIN_SAMPLES = 1000
AUDIT_ALPHA = 0.01


def _add_run_parser(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("run", help="sweep epsilon and seeds over the three pipelines")
    # Flags default to None so that PFR_* environment values stay in effect.
    p.add_argument("--n", type=int, help="items per ranking")
    p.add_argument("--users", type=int, help="number of users L")
    p.add_argument("--k", type=int, help="DCG constraint depth (default n)")
    p.add_argument("--theta", type=float, help="NDCG floor in [0, 1]")
    p.add_argument("--epsilon", dest="epsilons", type=float, action="append",
                   help="total privacy budget; repeat for a sweep")
    p.add_argument("--seed", dest="seeds", type=int, action="append",
                   help="run seed; repeat for several")
    p.add_argument("--fractional-bits", type=int)
    p.add_argument("--scaling", choices=[m.value for m in ScalingMode])
    p.add_argument("--noise", choices=["on", "off"])
    p.add_argument("--delta-f", choices=["eq10", "one"],
                   help="sensitivity from the attention model, or forced to 1")
    p.add_argument("--transport", choices=["inproc", "tcp"])
    source = p.add_mutually_exclusive_group()
    source.add_argument("--input", dest="input_path", help="relevance CSV (users x items)")
    source.add_argument("--synth", choices=["uniform", "skewed"],
                        help="synthetic score distribution")
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--output", help="report CSV path")
    p.add_argument("--trace-output", help="per-user trace CSV path")
    p.add_argument("--log-level")
    p.set_defaults(handler=cmd_run)


def _add_verify_parser(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("verify-solver", help="compare solver against brute force")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-n", type=int, default=VERIFY_MAX_N)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-level", default="INFO")
    p.set_defaults(handler=cmd_verify_solver)


def _add_audit_parser(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("noise-audit", help="test jointly sampled noise against Laplace(0, b)")
    p.add_argument("--b", type=float, default=1.0, help="Laplace scale")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fractional-bits", type=int, default=20)
    p.add_argument("--transport", choices=["inproc", "tcp"], default="inproc")
    p.add_argument("--log-level", default="INFO")
    p.set_defaults(handler=cmd_noise_audit)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="private-fair-ranking",
        description="Private fair reranking experiments",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(subparsers)
    _add_verify_parser(subparsers)
    _add_audit_parser(subparsers)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    keys = [
        "n", "users", "k", "theta", "epsilons", "seeds", "fractional_bits",
        "scaling", "delta_f", "transport", "input_path", "synth", "r_min",
        "r_max", "output", "trace_output", "log_level",
    ]
    values = {key: getattr(args, key) for key in keys if getattr(args, key) is not None}
    if args.noise is not None:
        values["noise"] = args.noise == "on"
    return values


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _load_matrix(config: ExperimentConfig) -> RelevanceMatrix:
    scale = RatingScale(config.r_min, config.r_max)
    if config.input_path is not None:
        return load_relevance_csv(config.input_path, scale)
    return synth_relevance(config.users, config.n, config.seeds[0], scale, config.synth)


def _print_summary(report: RunReport) -> None:
    header = f"{'epsilon':>10} {'seed':>6} {'none':>9} {'central':>9} {'private':>9} {'mean_ndcg':>10} {'min_ndcg':>9} {'aborts':>6} {'ms/user':>8}"
    print(header)
    print("-" * len(header))
    for row in report.rows:
        print(
            f"{row.epsilon:>10g} {row.seed:>6d} {row.unfairness_none:>9.4f} "
            f"{row.unfairness_central_fair:>9.4f} {row.unfairness_private:>9.4f} "
            f"{row.mean_ndcg:>10.4f} {row.min_ndcg:>9.4f} {row.aborts:>6d} "
            f"{row.runtime_ms:>8.1f}"
        )


def cmd_run(args: argparse.Namespace) -> int:
    overrides = _overrides(args)
    try:
        # k is checked against n only once an input file has fixed n.
        config = ExperimentConfig(**{**overrides, "k": None})
    except ValidationError as exc:
        print(f"invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    _configure_logging(config.log_level)

    with Telemetry(TelemetryConfig()):
        try:
            matrix = _load_matrix(config)
        except IngestionError as exc:
            logger.error("%s", exc)
            return EXIT_IO
        except ParameterError as exc:
            logger.error("%s", exc)
            return EXIT_CONFIG

        if config.input_path is not None:
            overrides.update(n=matrix.n, users=matrix.users)
        try:
            config = ExperimentConfig(**overrides)
        except ValidationError as exc:
            logger.error("invalid configuration: %s", exc)
            return EXIT_CONFIG

        try:
            report = run_sweep(matrix.profiles(), config)
        except SolverError as exc:
            logger.error("solver failed: %s", exc)
            return EXIT_INVARIANT
        except (ConfigurationError, ParameterError) as exc:
            logger.error("%s", exc)
            return EXIT_CONFIG

        try:
            write_report_csv(report, config.output)
            if config.trace_output is not None:
                write_trace_csv(report.traces, config.trace_output)
        except ReportError as exc:
            logger.error("%s", exc)
            return EXIT_IO

    _print_summary(report)
    if config.depth == config.n:
        violations = report.floor_violations(config.theta)
        if violations:
            for row in violations:
                logger.error(
                    "quality floor violated: epsilon=%s seed=%s min_ndcg=%.12f < %s",
                    row.epsilon, row.seed, row.min_ndcg, config.theta,
                )
            return EXIT_INVARIANT
    return EXIT_OK


def verify_solver(trials: int, max_n: int, seed: int) -> List[str]:
    """Solve random instances both ways; return one message per mismatch."""
    rng = np.random.default_rng(seed)
    mismatches: List[str] = []
    for trial in range(trials):
        n = int(rng.integers(2, max_n + 1))
        theta = VERIFY_THETAS[trial % len(VERIFY_THETAS)]
        problem = random_problem(rng, n, theta)
        fast = solve(problem)
        exact = brute_force(problem)
        if not fast.same_order(exact) or abs(fast.cost - exact.cost) > COST_ATOL:
            mismatches.append(
                f"trial {trial}: n={n} theta={theta} k={problem.k} "
                f"solve={fast.permutation.tolist()} ({fast.cost:.12g}) "
                f"brute_force={exact.permutation.tolist()} ({exact.cost:.12g})"
            )
    return mismatches


def cmd_verify_solver(args: argparse.Namespace) -> int:
    _configure_logging(args.log_level)
    if args.trials < 0 or not 2 <= args.max_n <= min(VERIFY_MAX_N, BRUTE_FORCE_MAX_N):
        logger.error("need trials >= 0 and 2 <= max-n <= %s", VERIFY_MAX_N)
        return EXIT_CONFIG
    with Telemetry(TelemetryConfig()):
        mismatches = verify_solver(args.trials, args.max_n, args.seed)
    for line in mismatches:
        print(line)
    print(f"trials={args.trials} max_n={args.max_n} seed={args.seed} mismatches={len(mismatches)}")
    return EXIT_INVARIANT if mismatches else EXIT_OK


@dataclass(frozen=True)
class NoiseAudit:
    """Summary statistics of reconstructed noise against Laplace(0, b)."""

    b: float
    samples: int
    mean: float
    mean_tol: float
    variance: float
    variance_rtol: float
    ks_statistic: float
    ks_pvalue: float
    max_abs: float
    headroom: float

    @property
    def expected_variance(self) -> float:
        return 2.0 * self.b * self.b

    @property
    def passed(self) -> bool:
        return (
            abs(self.mean) <= self.mean_tol
            and abs(self.variance - self.expected_variance)
            <= self.variance_rtol * self.expected_variance
            and self.ks_pvalue >= AUDIT_ALPHA
            and self.max_abs < self.headroom
        )


def audit_noise(b: float, samples: int, seed: int, fractional_bits: int = 20,
                transport: str = "inproc") -> NoiseAudit:
    """Draw jointly sampled noise, reconstruct it, and test it against Laplace(0, b)."""
    codec = FixedPointCodec(fractional_bits)
    rngs, _ = party_generators(seed)
    with create_transport(transport) as link:
        v0, v1 = pi_lap(b, samples, rngs, codec=codec, transport=link)
    values = reveal_to_client(v0, v1, codec)

    ks = stats.kstest(values, "laplace", args=(0.0, b))
    return NoiseAudit(
        b=b,
        samples=samples,
        mean=float(np.mean(values)),
        mean_tol=4.5 * math.sqrt(2.0 * b * b / samples),
        variance=float(np.var(values, ddof=1)),
        variance_rtol=max(0.05, 5.0 * math.sqrt(5.0 / samples)),
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        max_abs=float(np.max(np.abs(values))),
        headroom=codec.bound,
    )


def cmd_noise_audit(args: argparse.Namespace) -> int:
    _configure_logging(args.log_level)
    if not args.b > 0 or args.samples < AUDIT_MIN_SAMPLES:
        logger.error("need b > 0 and samples >= %s", AUDIT_MIN_SAMPLES)
        return EXIT_CONFIG
    try:
        with Telemetry(TelemetryConfig()):
            result = audit_noise(args.b, args.samples, args.seed,
                                 args.fractional_bits, args.transport)
    except ParameterError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    for name in ("mean", "mean_tol", "variance", "expected_variance",
                 "ks_statistic", "ks_pvalue", "max_abs", "headroom"):
        print(f"{name:>18}: {getattr(result, name):.6g}")
    print(f"{'result':>18}: {'PASS' if result.passed else 'FAIL'}")
    return EXIT_OK if result.passed else EXIT_INVARIANT


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())

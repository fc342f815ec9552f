"""Demo: a short private reranking sequence with the servers linked over TCP.

Run with ``python demo/two_party_tcp.py``. Set ``PFR_TELEMETRY_ENABLE_TRACES=true``
(and friends) to ship spans to the collector from ``docker/``, or
``PFR_TELEMETRY_EXPORTER=console`` to print them.
"""

from __future__ import annotations

import logging
from typing import Dict

from private_fair_ranking import ExperimentConfig, Telemetry, TelemetryConfig
from private_fair_ranking.data_io import synth_relevance
from private_fair_ranking.evaluation import run_cell


def run_demo(
    n: int = 8,
    users: int = 40,
    epsilon: float = 1000.0,
    seed: int = 11,
) -> Dict[str, float]:
    """Run the three pipelines once and return their final unfairness."""
    config = ExperimentConfig(
        n=n,
        users=users,
        epsilons=[epsilon],
        seeds=[seed],
        transport="tcp",
    )
    matrix = synth_relevance(users, n, seed, distribution="skewed")
    cell = run_cell(matrix.profiles(), config, epsilon, seed)
    return {
        "none": cell.row.unfairness_none,
        "central_fair": cell.row.unfairness_central_fair,
        "private": cell.row.unfairness_private,
        "min_ndcg": cell.row.min_ndcg,
        "epsilon_spent": cell.private.epsilon_spent,
    }


def main() -> None:
    logging.basicConfig(level=logging.INFO)
    logger = logging.getLogger(__name__)

    with Telemetry(TelemetryConfig()):
        result = run_demo()
    for name, value in result.items():
        logger.info("%-14s %.6f", name, value)


if __name__ == "__main__":
    main()

"""Private fair reranking: secret-shared exposure aggregates, noisy release, exact reranking."""

from .config import ExperimentConfig, TelemetryConfig
from .evaluation import RunReport, run_sweep
from .protocol import initialize, run_sequence
from .solver import RerankProblem, Reranking, solve
from .telemetry import Telemetry
from ._version import __version__

__all__ = [
    "ExperimentConfig",
    "TelemetryConfig",
    "RunReport",
    "run_sweep",
    "initialize",
    "run_sequence",
    "RerankProblem",
    "Reranking",
    "solve",
    "Telemetry",
    "__version__",
]

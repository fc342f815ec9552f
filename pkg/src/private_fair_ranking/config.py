"""Configuration for experiments and telemetry."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import field_validator, model_validator
from pydantic_settings import BaseSettings

from .solver import ScalingMode

DEFAULT_EPSILONS = [0.5, 1.0, 10.0, 100.0, 1000.0, 10000.0, 100000.0]


class ExperimentConfig(BaseSettings):
    """Parameters of one experiment (a sweep over epsilon and seeds).

    All fields can be overridden via environment variables with the ``PFR_``
    prefix, e.g. ``PFR_USERS=500``; list fields take JSON
    (``PFR_EPSILONS='[1, 10]'``). Command-line flags override both.
    """

    model_config = {"env_prefix": "PFR_"}

    # Problem size
    n: int = 20
    users: int = 200
    k: Optional[int] = None  # None means k = n

    # Quality floor and privacy sweep
    theta: float = 0.8
    epsilons: List[float] = list(DEFAULT_EPSILONS)
    seeds: List[int] = [7]

    # Numerics and protocol switches
    fractional_bits: int = 20
    scaling: ScalingMode = ScalingMode.ARGMIN_PRESERVING
    noise: bool = True
    delta_f: Literal["eq10", "one"] = "eq10"
    transport: Literal["inproc", "tcp"] = "inproc"

    # Relevance input: a CSV file, or synthetic scores
    input_path: Optional[Path] = None
    synth: Literal["uniform", "skewed"] = "uniform"
    r_min: float = 1.0
    r_max: float = 5.0

    # Outputs
    output: Path = Path("report.csv")
    trace_output: Optional[Path] = None
    log_level: str = "INFO"

    @field_validator("n", "users")
    @classmethod
    def _positive_count(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @field_validator("theta")
    @classmethod
    def _theta_in_unit_interval(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError("theta must be in [0, 1]")
        return value

    @field_validator("epsilons")
    @classmethod
    def _epsilons_positive(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("at least one epsilon is required")
        if any(not eps > 0 for eps in value):
            raise ValueError("every epsilon must be > 0")
        return value

    @field_validator("seeds")
    @classmethod
    def _seeds_present(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one seed is required")
        return value

    @field_validator("fractional_bits")
    @classmethod
    def _fractional_bits_range(cls, value: int) -> int:
        if not 1 <= value <= 40:
            raise ValueError("fractional_bits must be in [1, 40]")
        return value

    @model_validator(mode="after")
    def _check_depth_and_scale(self) -> ExperimentConfig:
        if self.k is not None and not 1 <= self.k <= self.n:
            raise ValueError(f"k must be in [1, n={self.n}]")
        if not self.r_max > self.r_min:
            raise ValueError("r_max must exceed r_min")
        return self

    @property
    def depth(self) -> int:
        """Constraint depth k, defaulting to the full list."""
        return self.k if self.k is not None else self.n


class TelemetryConfig(BaseSettings):
    """Where traces, logs and metrics go.

    Fields are overridable with the ``PFR_TELEMETRY_`` prefix, e.g.
    ``PFR_TELEMETRY_ENABLE_TRACES=true``. Every signal is off by default so a
    desk run never opens a network connection.
    """

    model_config = {"env_prefix": "PFR_TELEMETRY_"}

    service_name: str = "private-fair-ranking"

    # OTLP/HTTP collector base URL and extra request headers
    endpoint: str = "http://localhost:4318"
    headers: Dict[str, str] = {}

    # "otlp" ships to the collector, "console" prints to stdout
    exporter: Literal["otlp", "console"] = "otlp"

    enable_traces: bool = False
    enable_logs: bool = False
    enable_metrics: bool = False
    metrics_interval_ms: int = 10000

    def headers_for_signal(self, signal: str) -> Dict[str, str]:
        """Headers sent with one signal's export requests.

        Args:
            signal: The signal type, one of "traces", "logs", "metrics".
        """
        headers = dict(self.headers)
        headers.setdefault("X-Signal-Type", signal)
        return headers

    @property
    def traces_endpoint(self) -> str:
        return f"{self.endpoint}/v1/traces"

    @property
    def logs_endpoint(self) -> str:
        return f"{self.endpoint}/v1/logs"

    @property
    def metrics_endpoint(self) -> str:
        return f"{self.endpoint}/v1/metrics"

    @property
    def any_enabled(self) -> bool:
        return self.enable_traces or self.enable_logs or self.enable_metrics

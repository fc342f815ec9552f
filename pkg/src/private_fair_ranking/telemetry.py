"""Telemetry: OpenTelemetry providers for traces, logs and metrics."""

from __future__ import annotations

import logging
from typing import List, Optional

from opentelemetry import trace
from opentelemetry._logs import set_logger_provider
from opentelemetry.sdk._logs import LoggerProvider, LoggingHandler
from opentelemetry.sdk._logs.export import BatchLogRecordProcessor
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader
from opentelemetry.sdk.resources import SERVICE_NAME, Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor

from .config import TelemetryConfig
from .exporters import (
    create_log_exporter,
    create_metric_exporter,
    create_trace_exporter,
)
from .instrumentation import set_meter

logger = logging.getLogger(__name__)

METER_NAME = "private-fair-ranking"


def _build_resource(config: TelemetryConfig) -> Resource:
    return Resource.create({SERVICE_NAME: config.service_name})


def setup_tracer_provider(config: TelemetryConfig) -> TracerProvider:
    """Create and register a TracerProvider that exports rerank spans."""
    provider = TracerProvider(resource=_build_resource(config))
    provider.add_span_processor(BatchSpanProcessor(create_trace_exporter(config)))
    trace.set_tracer_provider(provider)
    return provider


def setup_logger_provider(config: TelemetryConfig) -> LoggerProvider:
    provider = LoggerProvider(resource=_build_resource(config))
    provider.add_log_record_processor(
        BatchLogRecordProcessor(create_log_exporter(config))
    )
    return provider


def setup_meter_provider(config: TelemetryConfig) -> MeterProvider:
    reader = PeriodicExportingMetricReader(
        create_metric_exporter(config),
        export_interval_millis=config.metrics_interval_ms,
    )
    return MeterProvider(resource=_build_resource(config), metric_readers=[reader])


def create_otel_logging_handler(logger_provider: LoggerProvider) -> LoggingHandler:
    """Bridge stdlib logging records into the OTel log pipeline.

    Registers the provider globally and returns a handler that can be attached
    to any Python logger (e.g. the root logger).
    """
    set_logger_provider(logger_provider)
    return LoggingHandler(logger_provider=logger_provider)


class Telemetry:
    """Owns the OpenTelemetry providers for one process.

    Usage::

        with Telemetry(TelemetryConfig(enable_traces=True)):
            run_sweep(matrix, config)

    Spans and metrics emitted by the protocol go through the global tracer
    provider and the meter installed with :func:`instrumentation.set_meter`.
    """

    def __init__(self, config: Optional[TelemetryConfig] = None) -> None:
        self.config = config or TelemetryConfig()
        self._providers: List[object] = []
        self._handler: Optional[LoggingHandler] = None

        # --- Tracing ---
        if self.config.enable_traces:
            self._providers.append(setup_tracer_provider(self.config))
            logger.info("Traces enabled -> %s", self._target("traces"))

        # --- Logging ---
        if self.config.enable_logs:
            logger_provider = setup_logger_provider(self.config)
            self._providers.append(logger_provider)
            self._handler = create_otel_logging_handler(logger_provider)
            self._handler.setLevel(logging.DEBUG)
            logging.getLogger().addHandler(self._handler)
            logger.info("Logs enabled -> %s", self._target("logs"))

        # --- Metrics ---
        if self.config.enable_metrics:
            meter_provider = setup_meter_provider(self.config)
            self._providers.append(meter_provider)
            set_meter(meter_provider.get_meter(METER_NAME))
            logger.info("Metrics enabled -> %s", self._target("metrics"))

    def _target(self, signal: str) -> str:
        if self.config.exporter == "console":
            return "console"
        return getattr(self.config, f"{signal}_endpoint")

    @property
    def provider_count(self) -> int:
        return len(self._providers)

    def shutdown(self) -> None:
        """Flush and shut down every provider; errors are logged, not raised."""
        if self._handler is not None:
            logging.getLogger().removeHandler(self._handler)
            self._handler = None
        if self.config.enable_metrics:
            set_meter(None)
        for provider in self._providers:
            try:
                provider.shutdown()
            except Exception:
                logger.exception(
                    "Error shutting down provider %s", type(provider).__name__
                )
        self._providers.clear()

    def __enter__(self) -> Telemetry:
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

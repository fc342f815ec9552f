"""Exporter factories for each telemetry signal.

``exporter="otlp"`` ships OTLP/HTTP (protobuf) to the configured collector;
``exporter="console"`` writes the same records to stdout, which is what the
tests and quick local runs use.
"""

from __future__ import annotations

from typing import Union

from opentelemetry.exporter.otlp.proto.http._log_exporter import OTLPLogExporter
from opentelemetry.exporter.otlp.proto.http.metric_exporter import OTLPMetricExporter
from opentelemetry.exporter.otlp.proto.http.trace_exporter import OTLPSpanExporter
from opentelemetry.sdk.metrics.export import ConsoleMetricExporter
from opentelemetry.sdk.trace.export import ConsoleSpanExporter

from .config import TelemetryConfig

try:
    from opentelemetry.sdk._logs.export import ConsoleLogRecordExporter
except ImportError:  # SDK releases before the rename
    from opentelemetry.sdk._logs.export import ConsoleLogExporter as ConsoleLogRecordExporter


def create_trace_exporter(
    config: TelemetryConfig,
) -> Union[OTLPSpanExporter, ConsoleSpanExporter]:
    """Span exporter for the rerank-round and experiment-cell spans."""
    if config.exporter == "console":
        return ConsoleSpanExporter(service_name=config.service_name)
    return OTLPSpanExporter(
        endpoint=config.traces_endpoint,
        headers=config.headers_for_signal("traces"),
    )


def create_log_exporter(
    config: TelemetryConfig,
) -> Union[OTLPLogExporter, ConsoleLogRecordExporter]:
    if config.exporter == "console":
        return ConsoleLogRecordExporter()
    return OTLPLogExporter(
        endpoint=config.logs_endpoint,
        headers=config.headers_for_signal("logs"),
    )


def create_metric_exporter(
    config: TelemetryConfig,
) -> Union[OTLPMetricExporter, ConsoleMetricExporter]:
    if config.exporter == "console":
        return ConsoleMetricExporter()
    return OTLPMetricExporter(
        endpoint=config.metrics_endpoint,
        headers=config.headers_for_signal("metrics"),
    )

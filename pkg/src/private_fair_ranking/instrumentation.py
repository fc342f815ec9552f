"""Protocol metrics recorded through OpenTelemetry.

Counters:
  - ``fairrank.round.started``: private rerank rounds begun
  - ``fairrank.round.completed``: rounds whose uploads were aggregated
  - ``fairrank.round.aborted``: rounds dropped (solver or transport failure)
  - ``fairrank.noise.samples``: Laplace samples drawn by the servers

Histograms:
  - ``fairrank.round.duration``: wall-clock time of one round (seconds)

All metrics carry ``epsilon``, ``seed`` and ``transport`` attributes. With no
meter set every call is a no-op.
"""

from __future__ import annotations

from typing import Dict, Optional, Union

from opentelemetry.metrics import Meter

# Module-level meter reference, set by Telemetry at startup
_meter: Optional[Meter] = None

Attributes = Dict[str, Union[str, float, int]]


def set_meter(meter: Optional[Meter]) -> None:
    """Set (or clear) the meter used by :class:`ProtocolMetrics`."""
    global _meter
    _meter = meter


class ProtocolMetrics:
    """Records round counters and durations for one experiment cell."""

    def __init__(self, attributes: Attributes) -> None:
        self.attributes = dict(attributes)
        self._meter = _meter
        if self._meter is None:
            return
        self._started = self._meter.create_counter(
            "fairrank.round.started",
            description="Private rerank rounds begun",
        )
        self._completed = self._meter.create_counter(
            "fairrank.round.completed",
            description="Rounds whose uploads were aggregated",
        )
        self._aborted = self._meter.create_counter(
            "fairrank.round.aborted",
            description="Rounds dropped after a client or transport failure",
        )
        self._noise = self._meter.create_counter(
            "fairrank.noise.samples",
            description="Laplace samples drawn by the servers",
        )
        self._duration = self._meter.create_histogram(
            "fairrank.round.duration",
            unit="s",
            description="Duration of one private rerank round in seconds",
        )

    @property
    def enabled(self) -> bool:
        return self._meter is not None

    def round_started(self) -> None:
        if self.enabled:
            self._started.add(1, self.attributes)

    def round_finished(self, seconds: float, aborted: bool = False) -> None:
        if not self.enabled:
            return
        (self._aborted if aborted else self._completed).add(1, self.attributes)
        self._duration.record(seconds, self.attributes)

    def noise_drawn(self, count: int) -> None:
        if self.enabled:
            self._noise.add(count, self.attributes)

"""Relevance-score ingestion, synthetic scores, and report files."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import List, Literal, Sequence, Union

import numpy as np

from .errors import IngestionError, ReportError
from .evaluation import ReportRow, RunReport, TraceRow
from .fairness import RatingScale, RelevanceProfile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Distribution = Literal["uniform", "skewed"]

# Beta(2, 5) puts most mass in the lower third of the scale.
_SKEW_ALPHA = 2.0
_SKEW_BETA = 5.0


@dataclass(frozen=True, eq=False)
class RelevanceMatrix:
    """Users x items scores, all inside ``scale``."""

    scores: np.ndarray
    scale: RatingScale

    def __post_init__(self) -> None:
        if self.scores.ndim != 2 or 0 in self.scores.shape:
            raise IngestionError(f"relevance matrix must be 2-D and non-empty, got {self.scores.shape}")
        self.scores.setflags(write=False)

    @property
    def users(self) -> int:
        return self.scores.shape[0]

    @property
    def n(self) -> int:
        return self.scores.shape[1]

    def profiles(self) -> List[RelevanceProfile]:
        return [RelevanceProfile.from_raw(row, self.scale) for row in self.scores]


def _parse_cell(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def _is_numeric(text: str) -> bool:
    try:
        _parse_cell(text)
    except ValueError:
        return False
    return True


def load_relevance_csv(path: PathLike, scale: RatingScale = RatingScale()) -> RelevanceMatrix:
    """Read a dense users x items CSV with an optional header row.

    Every cell is validated; out-of-scale scores are rejected, never clipped.
    Row and column numbers in errors are 1-based file positions.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            lines = [row for row in csv.reader(fh)]
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise IngestionError(f"cannot read relevance file: {exc}", path=path) from exc

    records = [(i + 1, row) for i, row in enumerate(lines) if any(c.strip() for c in row)]
    if records and all(not _is_numeric(c) for c in records[0][1]):
        records = records[1:]
    if not records:
        raise IngestionError("relevance file has no data rows", path=path)

    width = len(records[0][1])
    rows: List[List[float]] = []
    for line_no, row in records:
        if len(row) != width:
            raise IngestionError(
                f"expected {width} columns, found {len(row)}", path=path, row=line_no
            )
        values = []
        for col, cell in enumerate(row, start=1):
            try:
                value = _parse_cell(cell.strip())
            except ValueError:
                raise IngestionError(
                    f"non-numeric cell {cell!r}", path=path, row=line_no, column=col
                ) from None
            if not scale.r_min <= value <= scale.r_max:
                raise IngestionError(
                    f"score {value} outside [{scale.r_min}, {scale.r_max}]",
                    path=path, row=line_no, column=col,
                )
            values.append(value)
        rows.append(values)

    matrix = RelevanceMatrix(np.array(rows, dtype=np.float64), scale)
    logger.info("loaded %s users x %s items from %s", matrix.users, matrix.n, path)
    return matrix


def synth_relevance(
    users: int,
    n: int,
    seed: int,
    scale: RatingScale = RatingScale(),
    distribution: Distribution = "uniform",
) -> RelevanceMatrix:
    """Reproducible synthetic scores: same arguments, same matrix bit for bit."""
    if users < 1 or n < 1:
        raise IngestionError(f"need users >= 1 and n >= 1, got {users} x {n}")
    rng = np.random.default_rng(seed)
    if distribution == "uniform":
        unit = rng.random((users, n))
    elif distribution == "skewed":
        unit = rng.beta(_SKEW_ALPHA, _SKEW_BETA, size=(users, n))
    else:
        raise IngestionError(f"unknown synthetic distribution {distribution!r}")
    scores = scale.r_min + unit * (scale.r_max - scale.r_min)
    return RelevanceMatrix(scores, scale)


def _write_rows(path: PathLike, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise ReportError(f"cannot write report: {exc}", path) from exc


def _format(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_report_csv(report: RunReport, path: PathLike) -> None:
    """Header plus one row per (epsilon, seed); floats are written losslessly."""
    _write_rows(
        path,
        ReportRow.columns(),
        [[_format(v) for v in astuple(row)] for row in report.rows],
    )
    logger.info("wrote %s report rows to %s", len(report.rows), path)


def read_report_csv(path: PathLike) -> RunReport:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ReportRow.columns():
                raise ReportError(f"unexpected report columns {reader.fieldnames}", path)
            rows = [
                ReportRow(
                    epsilon=float(rec["epsilon"]),
                    seed=int(rec["seed"]),
                    unfairness_none=float(rec["unfairness_none"]),
                    unfairness_central_fair=float(rec["unfairness_central_fair"]),
                    unfairness_private=float(rec["unfairness_private"]),
                    mean_ndcg=float(rec["mean_ndcg"]),
                    min_ndcg=float(rec["min_ndcg"]),
                    aborts=int(rec["aborts"]),
                    runtime_ms=float(rec["runtime_ms"]),
                )
                for rec in reader
            ]
    except OSError as exc:
        raise ReportError(f"cannot read report: {exc}", path) from exc
    except (TypeError, ValueError) as exc:
        raise ReportError(f"malformed report: {exc}", path) from exc
    return RunReport(rows=rows)


def write_trace_csv(traces: Sequence[TraceRow], path: PathLike) -> None:
    """One row per (epsilon, seed, user)."""
    _write_rows(
        path,
        TraceRow.columns(),
        [[_format(v) for v in astuple(t)] for t in traces],
    )
    logger.info("wrote %s trace rows to %s", len(traces), path)

"""Tests for relevance ingestion, synthetic scores and report files."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from private_fair_ranking.data_io import (
    RelevanceMatrix,
    load_relevance_csv,
    read_report_csv,
    synth_relevance,
    write_report_csv,
    write_trace_csv,
)
from private_fair_ranking.errors import IngestionError, ReportError
from private_fair_ranking.evaluation import ReportRow, RunReport, TraceRow
from private_fair_ranking.fairness import RatingScale


def _write(tmp_path: Path, text: str, name: str = "scores.csv") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadRelevanceCsv:
    def test_two_by_two(self, tmp_path: Path, scale: RatingScale) -> None:
        matrix = load_relevance_csv(_write(tmp_path, "5,1\n3,3\n"), scale)
        assert matrix.scores.tolist() == [[5.0, 1.0], [3.0, 3.0]]
        assert (matrix.users, matrix.n) == (2, 2)

    def test_header_row_is_skipped(self, tmp_path: Path, scale: RatingScale) -> None:
        matrix = load_relevance_csv(_write(tmp_path, "item_a,item_b\n5,1\n3,3\n"), scale)
        assert matrix.users == 2

    def test_blank_lines_ignored(self, tmp_path: Path, scale: RatingScale) -> None:
        matrix = load_relevance_csv(_write(tmp_path, "5,1\n\n3,3\n"), scale)
        assert matrix.users == 2

    def test_out_of_scale_names_cell(self, tmp_path: Path, scale: RatingScale) -> None:
        path = _write(tmp_path, "5,1\n6.0,3\n")
        with pytest.raises(IngestionError) as exc_info:
            load_relevance_csv(path, scale)
        assert (exc_info.value.row, exc_info.value.column) == (2, 1)
        assert "row 2" in str(exc_info.value)

    def test_non_numeric_cell(self, tmp_path: Path, scale: RatingScale) -> None:
        with pytest.raises(IngestionError) as exc_info:
            load_relevance_csv(_write(tmp_path, "5,1\n3,abc\n"), scale)
        assert (exc_info.value.row, exc_info.value.column) == (2, 2)

    def test_nan_is_not_a_score(self, tmp_path: Path, scale: RatingScale) -> None:
        with pytest.raises(IngestionError):
            load_relevance_csv(_write(tmp_path, "5,1\n3,nan\n"), scale)

    def test_ragged_rows(self, tmp_path: Path, scale: RatingScale) -> None:
        with pytest.raises(IngestionError, match="columns") as exc_info:
            load_relevance_csv(_write(tmp_path, "5,1,2\n3,3\n"), scale)
        assert exc_info.value.row == 2

    def test_empty_file(self, tmp_path: Path, scale: RatingScale) -> None:
        with pytest.raises(IngestionError, match="no data rows"):
            load_relevance_csv(_write(tmp_path, ""), scale)

    def test_header_only(self, tmp_path: Path, scale: RatingScale) -> None:
        with pytest.raises(IngestionError):
            load_relevance_csv(_write(tmp_path, "a,b\n"), scale)

    def test_missing_file(self, tmp_path: Path, scale: RatingScale) -> None:
        with pytest.raises(IngestionError, match="cannot read"):
            load_relevance_csv(tmp_path / "absent.csv", scale)

    def test_undecodable_bytes(self, tmp_path: Path, scale: RatingScale) -> None:
        path = tmp_path / "scores.csv"
        path.write_bytes(b"5,1\n3,\xff\xfe\n")
        with pytest.raises(IngestionError, match="cannot read") as exc_info:
            load_relevance_csv(path, scale)
        assert exc_info.value.path == path

    def test_matrix_is_read_only(self, tmp_path: Path, scale: RatingScale) -> None:
        matrix = load_relevance_csv(_write(tmp_path, "5,1\n3,3\n"), scale)
        with pytest.raises(ValueError):
            matrix.scores[0, 0] = 2.0

    def test_profiles(self, tmp_path: Path, scale: RatingScale) -> None:
        profiles = load_relevance_csv(_write(tmp_path, "5,1\n3,3\n"), scale).profiles()
        assert profiles[0].normalized.tolist() == [1.0, 0.0]
        assert profiles[1].normalized.tolist() == [0.5, 0.5]


class TestRelevanceMatrix:
    def test_rejects_one_dimensional(self, scale: RatingScale) -> None:
        with pytest.raises(IngestionError):
            RelevanceMatrix(np.array([1.0, 2.0]), scale)

    def test_rejects_empty(self, scale: RatingScale) -> None:
        with pytest.raises(IngestionError):
            RelevanceMatrix(np.zeros((0, 3)), scale)


class TestSynthRelevance:
    def test_same_seed_same_matrix(self) -> None:
        a = synth_relevance(20, 6, seed=9)
        b = synth_relevance(20, 6, seed=9)
        assert np.array_equal(a.scores, b.scores)

    def test_different_seeds_differ(self) -> None:
        assert not np.array_equal(
            synth_relevance(20, 6, seed=1).scores, synth_relevance(20, 6, seed=2).scores
        )

    def test_uniform_mean_is_mid_scale(self) -> None:
        scores = synth_relevance(1000, 20, seed=0).scores
        assert scores.mean() == pytest.approx(3.0, rel=0.02)
        assert scores.min() >= 1.0 and scores.max() <= 5.0

    def test_skewed_sits_low(self) -> None:
        scores = synth_relevance(1000, 20, seed=0, distribution="skewed").scores
        assert scores.mean() < 3.0
        assert scores.min() >= 1.0 and scores.max() <= 5.0

    def test_single_item(self) -> None:
        matrix = synth_relevance(4, 1, seed=0)
        assert all(p.normalized.tolist() == [1.0] for p in matrix.profiles())

    def test_unknown_distribution(self) -> None:
        with pytest.raises(IngestionError):
            synth_relevance(2, 2, seed=0, distribution="zipf")  # type: ignore[arg-type]

    def test_zero_users(self) -> None:
        with pytest.raises(IngestionError):
            synth_relevance(0, 3, seed=0)


class TestReportFiles:
    @pytest.fixture
    def report(self) -> RunReport:
        return RunReport(
            rows=[
                ReportRow(1.0, 7, 4.25, 1.1, 2.0000000001, 0.93, 0.81, 0, 1.5),
                ReportRow(10.0, 7, 4.25, 1.1, 1.2, 0.9, math.nan, 2, 1.25),
            ]
        )

    def test_roundtrip_is_lossless(self, tmp_path: Path, report: RunReport) -> None:
        path = tmp_path / "report.csv"
        write_report_csv(report, path)
        back = read_report_csv(path)
        assert back.rows[0] == report.rows[0]
        assert back.rows[1].outcome()[:6] == report.rows[1].outcome()[:6]
        assert math.isnan(back.rows[1].min_ndcg)

    def test_header(self, tmp_path: Path, report: RunReport) -> None:
        path = tmp_path / "report.csv"
        write_report_csv(report, path)
        header = path.read_text(encoding="utf-8").splitlines()[0]
        assert header == ",".join(ReportRow.columns())

    def test_empty_report_is_header_only(self, tmp_path: Path) -> None:
        path = tmp_path / "empty.csv"
        write_report_csv(RunReport(), path)
        assert path.read_text(encoding="utf-8").splitlines() == [",".join(ReportRow.columns())]
        assert read_report_csv(path).rows == []

    def test_unwritable_path(self, tmp_path: Path) -> None:
        with pytest.raises(ReportError):
            write_report_csv(RunReport(), tmp_path / "missing" / "report.csv")

    def test_wrong_columns(self, tmp_path: Path) -> None:
        with pytest.raises(ReportError, match="columns"):
            read_report_csv(_write(tmp_path, "a,b\n1,2\n"))

    def test_malformed_value(self, tmp_path: Path) -> None:
        header = ",".join(ReportRow.columns())
        with pytest.raises(ReportError, match="malformed"):
            read_report_csv(_write(tmp_path, f"{header}\n1,x,0,0,0,0,0,0,0\n"))

    def test_trace_file(self, tmp_path: Path) -> None:
        path = tmp_path / "trace.csv"
        write_trace_csv([TraceRow(1.0, 3, 0, 0.95, False, 2.0), TraceRow(1.0, 3, 1, math.nan, True, 1.0)], path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(TraceRow.columns())
        assert lines[1] == "1.0,3,0,0.95,0,2.0"
        assert lines[2] == "1.0,3,1,nan,1,1.0"

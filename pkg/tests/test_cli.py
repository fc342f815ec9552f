"""Tests for the command-line entry point and its exit codes."""

from __future__ import annotations

from pathlib import Path
from typing import List

import numpy as np
import pytest

from private_fair_ranking.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    audit_noise,
    main,
    verify_solver,
)
from private_fair_ranking.data_io import read_report_csv


def _run(tmp_path: Path, *extra: str) -> List[str]:
    return [
        "run", "--n", "5", "--users", "12", "--seed", "2",
        "--output", str(tmp_path / "report.csv"), "--log-level", "WARNING", *extra,
    ]


class TestRun:
    def test_small_sweep(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        code = main(_run(tmp_path, "--epsilon", "1000", "--epsilon", "100000"))
        assert code == EXIT_OK
        rows = read_report_csv(tmp_path / "report.csv").rows
        assert [r.epsilon for r in rows] == [1000.0, 100000.0]
        assert all(r.min_ndcg >= 0.8 - 1e-9 for r in rows)
        assert "min_ndcg" in capsys.readouterr().out

    def test_noise_off_private_equals_central(self, tmp_path: Path) -> None:
        code = main(_run(tmp_path, "--epsilon", "1", "--noise", "off", "--scaling", "none"))
        assert code == EXIT_OK
        (row,) = read_report_csv(tmp_path / "report.csv").rows
        assert row.unfairness_private == row.unfairness_central_fair

    def test_theta_one_keeps_every_ranking(self, tmp_path: Path) -> None:
        assert main(_run(tmp_path, "--epsilon", "10", "--theta", "1.0")) == EXIT_OK
        (row,) = read_report_csv(tmp_path / "report.csv").rows
        assert row.mean_ndcg == pytest.approx(1.0, abs=1e-9)

    def test_tcp_transport(self, tmp_path: Path) -> None:
        assert main(_run(tmp_path, "--epsilon", "100", "--transport", "tcp")) == EXIT_OK

    def test_trace_output(self, tmp_path: Path) -> None:
        trace = tmp_path / "trace.csv"
        assert main(_run(tmp_path, "--epsilon", "100", "--trace-output", str(trace))) == EXIT_OK
        assert len(trace.read_text(encoding="utf-8").splitlines()) == 1 + 12

    def test_input_file_sets_problem_size(self, tmp_path: Path) -> None:
        scores = tmp_path / "scores.csv"
        scores.write_text("a,b,c\n5,1,3\n2,4,4\n1,1,5\n", encoding="utf-8")
        code = main(_run(tmp_path, "--epsilon", "100", "--input", str(scores)))
        assert code == EXIT_OK
        assert len(read_report_csv(tmp_path / "report.csv").rows) == 1

    def test_bad_theta(self, tmp_path: Path) -> None:
        assert main(_run(tmp_path, "--theta", "1.5")) == EXIT_CONFIG

    def test_depth_beyond_items(self, tmp_path: Path) -> None:
        assert main(_run(tmp_path, "--k", "6")) == EXIT_CONFIG

    def test_depth_beyond_items_in_file(self, tmp_path: Path) -> None:
        scores = tmp_path / "scores.csv"
        scores.write_text("5,1\n2,4\n", encoding="utf-8")
        assert main(_run(tmp_path, "--input", str(scores), "--k", "3")) == EXIT_CONFIG

    def test_file_size_replaces_default_size_before_depth_check(self, tmp_path: Path) -> None:
        scores = tmp_path / "scores.csv"
        rows = np.random.default_rng(3).integers(1, 6, size=(4, 30))
        scores.write_text("\n".join(",".join(map(str, row)) for row in rows) + "\n", encoding="utf-8")
        argv = _run(tmp_path, "--epsilon", "100", "--theta", "0.0", "--input", str(scores), "--k", "25")
        assert main(argv) == EXIT_OK
        (row,) = read_report_csv(tmp_path / "report.csv").rows
        assert row.epsilon == 100.0

    def test_undecodable_input(self, tmp_path: Path) -> None:
        scores = tmp_path / "scores.csv"
        scores.write_bytes(b"5,1\n3,\xff\xfe\n")
        assert main(_run(tmp_path, "--input", str(scores))) == EXIT_IO

    def test_missing_input(self, tmp_path: Path) -> None:
        assert main(_run(tmp_path, "--input", str(tmp_path / "absent.csv"))) == EXIT_IO

    def test_out_of_scale_input(self, tmp_path: Path) -> None:
        scores = tmp_path / "scores.csv"
        scores.write_text("5,1\n6,4\n", encoding="utf-8")
        assert main(_run(tmp_path, "--input", str(scores))) == EXIT_IO

    def test_unwritable_output(self, tmp_path: Path) -> None:
        argv = _run(tmp_path, "--epsilon", "100") + ["--output", str(tmp_path / "no" / "r.csv")]
        assert main(argv) == EXIT_IO

    def test_environment_fills_defaults(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("PFR_EPSILONS", "[5, 50]")
        assert main(_run(tmp_path)) == EXIT_OK
        assert [r.epsilon for r in read_report_csv(tmp_path / "report.csv").rows] == [5.0, 50.0]


class TestVerifySolver:
    def test_no_mismatches(self) -> None:
        assert verify_solver(30, 6, seed=3) == []

    def test_command(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["verify-solver", "--trials", "20", "--log-level", "WARNING"]) == EXIT_OK
        assert "mismatches=0" in capsys.readouterr().out

    def test_zero_trials(self) -> None:
        assert main(["verify-solver", "--trials", "0"]) == EXIT_OK

    def test_max_n_too_large(self) -> None:
        assert main(["verify-solver", "--max-n", "9"]) == EXIT_CONFIG


class TestNoiseAudit:
    def test_audit_statistics(self) -> None:
        result = audit_noise(2.0, 20_000, seed=1)
        assert result.expected_variance == 8.0
        assert result.passed

    def test_command(self, capsys: pytest.CaptureFixture[str]) -> None:
        code = main(["noise-audit", "--samples", "5000", "--b", "1.5", "--log-level", "WARNING"])
        assert code == EXIT_OK
        assert "PASS" in capsys.readouterr().out

    def test_too_few_samples(self) -> None:
        assert main(["noise-audit", "--samples", "10"]) == EXIT_CONFIG

    def test_nonpositive_scale(self) -> None:
        assert main(["noise-audit", "--b", "0"]) == EXIT_CONFIG


class TestVersion:
    def test_version_flag(self, capsys: pytest.CaptureFixture[str]) -> None:
        with pytest.raises(SystemExit) as exc_info:
            main(["--version"])
        assert exc_info.value.code == 0
        assert "private-fair-ranking" in capsys.readouterr().out

"""E2E test: run the two-party TCP demo end to end."""

from __future__ import annotations

import os
import sys

import pytest

# Add demo directory to path so we can import the demo module
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "demo"))

from two_party_tcp import run_demo  # noqa: E402


class TestTwoPartyDemo:
    def test_runs_over_tcp(self) -> None:
        result = run_demo(n=5, users=12, epsilon=1e5, seed=2)
        assert set(result) == {"none", "central_fair", "private", "min_ndcg", "epsilon_spent"}
        assert result["min_ndcg"] >= 0.8 - 1e-9
        assert result["epsilon_spent"] == pytest.approx(1e5)

    def test_fair_pipelines_beat_baseline(self) -> None:
        result = run_demo(n=5, users=30, epsilon=1e5, seed=4)
        assert result["central_fair"] < result["none"]

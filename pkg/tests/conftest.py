"""Shared fixtures for private-fair-ranking tests."""

from __future__ import annotations

from pathlib import Path
from typing import List

import numpy as np
import pytest

from private_fair_ranking.config import ExperimentConfig
from private_fair_ranking.data_io import RelevanceMatrix, synth_relevance
from private_fair_ranking.fairness import RatingScale, RelevanceProfile
from private_fair_ranking.ring import FixedPointCodec


@pytest.fixture
def default_config() -> ExperimentConfig:
    """Return an ExperimentConfig with all defaults."""
    return ExperimentConfig()


@pytest.fixture
def custom_config(monkeypatch: pytest.MonkeyPatch) -> ExperimentConfig:
    """Return an ExperimentConfig driven by environment variables."""
    monkeypatch.setenv("PFR_N", "6")
    monkeypatch.setenv("PFR_USERS", "12")
    monkeypatch.setenv("PFR_K", "4")
    monkeypatch.setenv("PFR_THETA", "0.9")
    monkeypatch.setenv("PFR_EPSILONS", "[1, 10]")
    monkeypatch.setenv("PFR_SEEDS", "[3, 4]")
    monkeypatch.setenv("PFR_NOISE", "false")
    monkeypatch.setenv("PFR_SCALING", "literal")
    monkeypatch.setenv("PFR_TRANSPORT", "tcp")
    monkeypatch.setenv("PFR_DELTA_F", "one")
    return ExperimentConfig()


@pytest.fixture
def small_config(tmp_path: Path) -> ExperimentConfig:
    """A fast sweep cell: 5 items, 10 users, one epsilon, one seed."""
    return ExperimentConfig(
        n=5,
        users=10,
        epsilons=[100000.0],
        seeds=[3],
        output=tmp_path / "report.csv",
    )


@pytest.fixture
def codec() -> FixedPointCodec:
    return FixedPointCodec()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def scale() -> RatingScale:
    return RatingScale(1.0, 5.0)


@pytest.fixture
def small_matrix() -> RelevanceMatrix:
    return synth_relevance(10, 5, seed=5)


@pytest.fixture
def small_profiles(small_matrix: RelevanceMatrix) -> List[RelevanceProfile]:
    return small_matrix.profiles()

"""Tests for attention, relevance normalization, DCG/NDCG and unfairness."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from private_fair_ranking.errors import ParameterError
from private_fair_ranking.fairness import (
    AttentionModel,
    RatingScale,
    RelevanceProfile,
    attention_weights,
    dcg_at_k,
    ndcg,
    normalize_relevance,
    relevance_ranking,
    sensitivity,
    unfairness,
)
from private_fair_ranking.solver import Reranking


class TestAttention:
    def test_single_item(self) -> None:
        assert attention_weights(1).tolist() == [1.0]

    def test_two_items(self) -> None:
        assert attention_weights(2) == pytest.approx([2 / 3, 1 / 3], abs=1e-15)

    def test_three_items(self) -> None:
        assert attention_weights(3) == pytest.approx([4 / 7, 2 / 7, 1 / 7], abs=1e-15)

    def test_sums_to_one_and_decreases(self) -> None:
        w = attention_weights(50)
        assert math.fsum(w) == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(w) < 0)

    def test_raw_weights_are_geometric(self) -> None:
        assert AttentionModel(3).weights.tolist() == [0.5, 0.25, 0.125]

    def test_zero_items(self) -> None:
        with pytest.raises(ParameterError):
            attention_weights(0)


class TestRelevance:
    def test_extremes(self, scale: RatingScale) -> None:
        assert normalize_relevance([5, 1], scale).tolist() == [1.0, 0.0]

    def test_three_levels(self, scale: RatingScale) -> None:
        assert normalize_relevance([5, 3, 1], scale) == pytest.approx([2 / 3, 1 / 3, 0.0])

    def test_all_at_minimum_is_uniform(self, scale: RatingScale) -> None:
        assert normalize_relevance([1, 1, 1, 1], scale).tolist() == [0.25] * 4

    def test_out_of_scale_names_item(self, scale: RatingScale) -> None:
        with pytest.raises(ParameterError, match="item 1"):
            normalize_relevance([3.0, 5.5], scale)

    def test_empty(self, scale: RatingScale) -> None:
        with pytest.raises(ParameterError):
            normalize_relevance([], scale)

    def test_inverted_scale(self) -> None:
        with pytest.raises(ParameterError):
            RatingScale(5.0, 1.0)

    def test_ranking_breaks_ties_by_index(self) -> None:
        assert relevance_ranking([3.0, 5.0, 3.0, 4.0]).tolist() == [1, 3, 0, 2]

    def test_profile_from_raw(self, scale: RatingScale) -> None:
        profile = RelevanceProfile.from_raw([2.0, 5.0, 1.0], scale)
        assert profile.n == 3
        assert profile.ranking.tolist() == [1, 0, 2]
        assert math.fsum(profile.normalized) == pytest.approx(1.0)


class TestDcg:
    def test_identity(self) -> None:
        assert dcg_at_k([1.0, 0.0], [0, 1], 2) == 1.0

    def test_swapped(self) -> None:
        assert dcg_at_k([1.0, 0.0], [1, 0], 2) == pytest.approx(1 / math.log2(3))
        assert dcg_at_k([1.0, 0.0], [1, 0], 2) == pytest.approx(0.6309, abs=1e-4)

    def test_all_zero_relevance(self) -> None:
        assert dcg_at_k([0.0, 0.0, 0.0], [2, 0, 1], 3) == 0.0

    def test_truncated_depth(self) -> None:
        assert dcg_at_k([0.0, 1.0], [0, 1], 1) == 0.0

    def test_accepts_reranking(self) -> None:
        assert dcg_at_k([1.0, 0.0], Reranking(np.array([0, 1])), 2) == 1.0

    def test_relevance_order_maximizes_dcg(self, rng: np.random.Generator) -> None:
        for n in range(1, 7):
            for _ in range(5):
                r_hat = rng.random(n)
                best = relevance_ranking(r_hat)
                for k in range(1, n + 1):
                    top = max(dcg_at_k(r_hat, p, k) for p in itertools.permutations(range(n)))
                    assert dcg_at_k(r_hat, best, k) >= top - 1e-12

    @pytest.mark.parametrize("k", [0, 3])
    def test_invalid_depth(self, k: int) -> None:
        with pytest.raises(ParameterError):
            dcg_at_k([1.0, 0.0], [0, 1], k)


class TestNdcg:
    def test_same_ranking(self) -> None:
        assert ndcg([2, 0, 1], [2, 0, 1], [0.3, 0.2, 0.5]) == 1.0

    def test_equal_relevance_swapped(self) -> None:
        assert ndcg([0, 1, 2], [1, 0, 2], [0.4, 0.4, 0.2]) == pytest.approx(1.0, abs=1e-15)

    def test_reversed(self) -> None:
        assert ndcg([0, 1], [1, 0], [1.0, 0.0]) == pytest.approx(0.6309, abs=1e-4)

    def test_zero_denominator(self) -> None:
        assert ndcg([0, 1], [1, 0], [0.0, 0.0]) == 1.0


class TestUnfairness:
    def test_equal_vectors(self) -> None:
        assert unfairness([0.2, 0.8], [0.2, 0.8]) == 0.0

    def test_arithmetic(self) -> None:
        assert unfairness([0.5, 0.5], [0.3, 0.7]) == pytest.approx(0.4)

    def test_single_user(self) -> None:
        w_star = Reranking(np.array([0, 1])).item_attention(attention_weights(2))
        assert unfairness(w_star, [1.0, 0.0]) == pytest.approx(2 / 3)

    def test_symmetric(self, rng: np.random.Generator) -> None:
        for _ in range(20):
            a, r = rng.random(6), rng.random(6)
            assert unfairness(a, r) == unfairness(r, a)

    def test_zero_only_for_equal_vectors(self, rng: np.random.Generator) -> None:
        a = rng.random(5)
        assert unfairness(a, a.copy()) == 0.0
        for i in range(5):
            b = a.copy()
            b[i] += 1e-9
            assert unfairness(a, b) > 0.0

    def test_length_mismatch(self) -> None:
        with pytest.raises(ParameterError):
            unfairness([0.5], [0.5, 0.5])


class TestSensitivity:
    def test_hundred_items(self) -> None:
        assert sensitivity(100) == pytest.approx(1.0, abs=1e-9)

    def test_one_item(self) -> None:
        assert sensitivity(1) == 1.0

    def test_two_items(self) -> None:
        assert sensitivity(2) == pytest.approx(2 / 3, abs=1e-12)

    def test_grows_with_list_length_and_stays_at_most_one(self) -> None:
        values = [sensitivity(n) for n in range(2, 80)]
        assert all(a <= b for a, b in zip(values, values[1:]))
        # A single item takes all the attention, so n = 1 sits at the cap.
        assert all(v <= 1.0 for v in values + [sensitivity(1)])

    def test_model_size_must_match(self) -> None:
        with pytest.raises(ParameterError):
            sensitivity(3, AttentionModel(4))

"""Plaintext fairness arithmetic: attention, relevance, DCG/NDCG, unfairness.

Everything here is a pure function over immutable inputs. Positions and items
are zero-based; a ranking is an array whose entry j is the item shown at
position j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ParameterError

ATTENTION_BASE = 0.5

Ordering = Union[Sequence[int], np.ndarray]


@dataclass(frozen=True)
class AttentionModel:
    """Geometric position bias: w_j = 0.5 * 0.5^(j-1) for positions j = 1..n."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError(f"attention model needs n >= 1, got {self.n}")

    @property
    def weights(self) -> np.ndarray:
        return ATTENTION_BASE * ATTENTION_BASE ** np.arange(self.n, dtype=np.float64)

    @property
    def normalized(self) -> np.ndarray:
        w = self.weights
        return w / w.sum()


@dataclass(frozen=True)
class RatingScale:
    """Lowest and highest score a user can give."""

    r_min: float = 1.0
    r_max: float = 5.0

    def __post_init__(self) -> None:
        if not self.r_max > self.r_min:
            raise ParameterError(
                f"rating scale needs r_max > r_min, got [{self.r_min}, {self.r_max}]"
            )

    def contains(self, values: np.ndarray) -> np.ndarray:
        return (values >= self.r_min) & (values <= self.r_max)


@dataclass(frozen=True, eq=False)
class RelevanceProfile:
    """A user's raw scores, their normalized form and the induced ranking."""

    raw: np.ndarray
    normalized: np.ndarray
    ranking: np.ndarray = field(repr=False)

    @classmethod
    def from_raw(cls, raw: Sequence[float], scale: RatingScale) -> RelevanceProfile:
        scores = np.asarray(raw, dtype=np.float64)
        return cls(
            raw=scores,
            normalized=normalize_relevance(scores, scale),
            ranking=relevance_ranking(scores),
        )

    @property
    def n(self) -> int:
        return len(self.raw)


def attention_weights(n: int) -> np.ndarray:
    """Return the normalized attention vector for n positions."""
    return AttentionModel(n).normalized


def normalize_relevance(raw: Sequence[float], scale: RatingScale) -> np.ndarray:
    """Min-max scale by the rating bounds, then divide by the sum.

    If every score sits at r_min the sum is zero; the result is then uniform.
    """
    scores = np.asarray(raw, dtype=np.float64)
    if scores.ndim != 1 or len(scores) == 0:
        raise ParameterError("relevance scores must be a non-empty vector")
    outside = ~scale.contains(scores)
    if np.any(outside):
        idx = int(np.flatnonzero(outside)[0])
        raise ParameterError(
            f"score {scores[idx]!r} at item {idx} outside "
            f"[{scale.r_min}, {scale.r_max}]"
        )
    scaled = (scores - scale.r_min) / (scale.r_max - scale.r_min)
    total = scaled.sum()
    if total <= 0.0:
        return np.full(len(scores), 1.0 / len(scores))
    return scaled / total


def relevance_ranking(raw: Sequence[float]) -> np.ndarray:
    """Items by descending score; ties keep ascending item index."""
    return np.argsort(-np.asarray(raw, dtype=np.float64), kind="stable")


def gains(r_hat: np.ndarray) -> np.ndarray:
    return np.exp2(np.asarray(r_hat, dtype=np.float64)) - 1.0


def discounts(n: int) -> np.ndarray:
    """1 / log2(j + 1) for positions j = 1..n."""
    return 1.0 / np.log2(np.arange(2, n + 2, dtype=np.float64))


def _as_order(permutation) -> np.ndarray:
    return np.asarray(getattr(permutation, "permutation", permutation), dtype=np.intp)


def dcg_at_k(r_hat: Sequence[float], permutation, k: int) -> float:
    """DCG of the first k positions of ``permutation`` under gains 2^r - 1."""
    rel = np.asarray(r_hat, dtype=np.float64)
    order = _as_order(permutation)
    n = len(rel)
    if len(order) != n:
        raise ParameterError(f"ranking has {len(order)} positions for {n} items")
    if not 1 <= k <= n:
        raise ParameterError(f"k must be in [1, {n}], got {k}")
    g = gains(rel)
    d = discounts(k)
    return math.fsum(g[order[j]] * d[j] for j in range(k))


def ndcg(original: Ordering, reranked: Ordering, r_hat: Sequence[float]) -> float:
    """DCG(reranked) / DCG(original) over the full list.

    Returns 1.0 when the original DCG is zero.
    """
    n = len(r_hat)
    ideal = dcg_at_k(r_hat, original, n)
    if ideal <= 0.0:
        return 1.0
    return dcg_at_k(r_hat, reranked, n) / ideal


def unfairness(attention: Sequence[float], relevance: Sequence[float]) -> float:
    """L1 distance between accumulated attention and accumulated relevance."""
    a = np.asarray(attention, dtype=np.float64)
    r = np.asarray(relevance, dtype=np.float64)
    if a.shape != r.shape:
        raise ParameterError(f"length mismatch: {a.shape} vs {r.shape}")
    return math.fsum(np.abs(a - r))


def sensitivity(n: int, attention: Optional[AttentionModel] = None) -> float:
    """Largest change one user can cause in any A_i - R_i.

    With r_hat in [0, 1] the extremes are the top attention weight against
    zero relevance, or the bottom weight against full relevance.
    """
    model = attention if attention is not None else AttentionModel(n)
    if model.n != n:
        raise ParameterError(f"attention model is for {model.n} items, not {n}")
    w_hat = model.normalized
    r_hat_min, r_hat_max = 0.0, 1.0
    return max(abs(w_hat[0] - r_hat_min), abs(w_hat[-1] - r_hat_max))

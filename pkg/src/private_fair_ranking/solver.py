"""Exact per-user reranking under a DCG floor.

The problem is an n x n assignment: put item i at position j at cost
C[i, j] = |xi_i + w_hat_j - r_hat_i|, minimise the total, and keep the DCG of
the first k positions at or above theta times the DCG of the original
ranking. :func:`solve` runs a depth-first branch-and-bound over positions
twice, once for the optimal cost and once to pick the lexicographically
smallest permutation that reaches it:

* bound: optimal unconstrained assignment of the remaining items to the
  remaining positions (``scipy.optimize.linear_sum_assignment``), tightened by
  relaxing the DCG floor with a multiplier and bisecting on it;
* pruning: the best DCG still reachable (largest gains on the best
  discounts) against the floor;
* incumbents: every assignment met while bounding that meets the floor;
* twins: items whose cost rows differ by a constant are interchangeable, so
  the cost search only places them in gain order. Large noise makes most
  rows affine in the attention weight, and without this the search stalls
  on plateaus of equal-cost orderings.

Costs within a relative tolerance count as equal, and :func:`brute_force`
applies the same rule, so both return the same answer.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ParameterError, SolverError
from .fairness import (
    RatingScale,
    RelevanceProfile,
    attention_weights,
    dcg_at_k,
    discounts,
    gains,
)

logger = logging.getLogger(__name__)

DCG_TOLERANCE = 1e-12
TIE_RTOL = 1e-12
BRUTE_FORCE_MAX_N = 8

_BISECTION_STEPS = 10
_MAX_DOUBLINGS = 60


class ScalingMode(str, Enum):
    """How the client scales the revealed unfairness vector."""

    NONE = "none"
    LITERAL = "literal"
    ARGMIN_PRESERVING = "argmin_preserving"


@dataclass(frozen=True, eq=False)
class RerankProblem:
    xi: np.ndarray
    r_hat: np.ndarray
    w_hat: np.ndarray
    theta: float
    k: int
    original: np.ndarray
    dcg_target: float
    cost: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        n = len(self.r_hat)
        object.__setattr__(self, "_cost_rows", self.cost.tolist())
        object.__setattr__(self, "_gains", gains(self.r_hat).tolist())
        object.__setattr__(self, "_discounts", discounts(self.k).tolist())
        if self.cost.shape != (n, n) or not np.all(np.isfinite(self.cost)):
            raise ParameterError("cost matrix must be a finite n x n array")

    @property
    def n(self) -> int:
        return len(self.r_hat)

    def scaled(self, factor: float) -> RerankProblem:
        """Same problem with every cost multiplied by a positive constant."""
        if not factor > 0:
            raise ParameterError(f"cost scale must be positive, got {factor}")
        return replace(self, cost=self.cost * factor)

    def permutation_cost(self, permutation: Sequence[int]) -> float:
        rows = self._cost_rows
        return math.fsum(rows[item][j] for j, item in enumerate(permutation))

    def permutation_dcg(self, permutation: Sequence[int]) -> float:
        g, d = self._gains, self._discounts
        return math.fsum(g[permutation[j]] * d[j] for j in range(self.k))

    def is_feasible(self, permutation: Sequence[int]) -> bool:
        return self.permutation_dcg(permutation) >= self.dcg_target - DCG_TOLERANCE


@dataclass(frozen=True, eq=False)
class Reranking:
    """A permutation (position -> item) and its objective value."""

    permutation: np.ndarray
    cost: float = float("nan")

    def __post_init__(self) -> None:
        perm = np.asarray(self.permutation, dtype=np.intp)
        if sorted(perm.tolist()) != list(range(len(perm))):
            raise ParameterError(f"not a permutation: {perm.tolist()}")
        object.__setattr__(self, "permutation", perm)

    @property
    def n(self) -> int:
        return len(self.permutation)

    @property
    def matrix(self) -> np.ndarray:
        """X[i, j] = 1 when item i sits at position j."""
        x = np.zeros((self.n, self.n), dtype=np.int8)
        x[self.permutation, np.arange(self.n)] = 1
        return x

    @property
    def positions(self) -> np.ndarray:
        """Inverse permutation: item -> position."""
        pos = np.empty(self.n, dtype=np.intp)
        pos[self.permutation] = np.arange(self.n)
        return pos

    def item_attention(self, w_hat: Sequence[float]) -> np.ndarray:
        """w_hat reordered so entry i is the attention item i receives."""
        w = np.asarray(w_hat, dtype=np.float64)
        if len(w) != self.n:
            raise ParameterError(f"{len(w)} weights for {self.n} positions")
        out = np.empty(self.n, dtype=np.float64)
        out[self.permutation] = w
        return out

    def same_order(self, other: Reranking) -> bool:
        return np.array_equal(self.permutation, other.permutation)


def _check_vector(name: str, values, n: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (n,):
        raise ParameterError(f"{name} has shape {arr.shape}, expected ({n},)")
    return arr


def build_problem(
    xi: Sequence[float],
    r_hat: Sequence[float],
    w_hat: Sequence[float],
    theta: float,
    k: int,
    original: Sequence[int],
) -> RerankProblem:
    rel = np.asarray(r_hat, dtype=np.float64)
    n = len(rel)
    if n < 1:
        raise ParameterError("empty reranking problem")
    xi_arr = _check_vector("xi", xi, n)
    w = _check_vector("w_hat", w_hat, n)
    order = np.asarray(original, dtype=np.intp)
    if sorted(order.tolist()) != list(range(n)):
        raise ParameterError("original ranking is not a permutation of the items")
    if not 0.0 <= theta <= 1.0:
        raise ParameterError(f"theta must be in [0, 1], got {theta}")
    if not 1 <= k <= n:
        raise ParameterError(f"k must be in [1, {n}], got {k}")
    cost = np.abs(xi_arr[:, None] + w[None, :] - rel[:, None])
    return RerankProblem(
        xi=xi_arr,
        r_hat=rel,
        w_hat=w,
        theta=float(theta),
        k=int(k),
        original=order,
        dcg_target=theta * dcg_at_k(rel, order, k),
        cost=cost,
    )


def apply_scaling(
    xi_raw: Sequence[float],
    mode: ScalingMode,
    epsilon: Optional[float] = None,
    users: Optional[int] = None,
) -> np.ndarray:
    """Transform the revealed vector before it enters the cost matrix.

    ``literal`` multiplies xi alone by epsilon / L. Because xi sits inside an
    absolute value next to w_hat and r_hat, this can move the optimum.
    ``argmin_preserving`` leaves xi alone; the caller scales the whole cost
    matrix instead (see :func:`objective_scale`).
    """
    xi = np.asarray(xi_raw, dtype=np.float64)
    mode = ScalingMode(mode)
    if mode is ScalingMode.LITERAL:
        if epsilon is None or users is None or not epsilon > 0 or not users > 0:
            raise ParameterError(
                f"literal scaling needs epsilon > 0 and L > 0, got {epsilon}, {users}"
            )
        return xi * (epsilon / users)
    return xi.copy()


def objective_scale(
    mode: ScalingMode, epsilon: Optional[float], users: Optional[int]
) -> float:
    """Positive factor applied to the whole cost matrix (1 unless argmin-preserving)."""
    if ScalingMode(mode) is ScalingMode.ARGMIN_PRESERVING and epsilon and users:
        return float(epsilon) / float(users)
    return 1.0


def _tie_tolerance(problem: RerankProblem) -> float:
    """Costs closer than this count as equal."""
    return TIE_RTOL * problem.n * max(1.0, float(np.max(np.abs(problem.cost))))


def _twin_blockers(cost: np.ndarray, gain: np.ndarray, tol: float) -> List[List[int]]:
    """For each item, the cost twins that must be placed before it.

    Two items are twins when their cost rows differ by a constant, so swapping
    them never changes the objective. Moving the higher-gain twin to the
    earlier position never lowers the DCG, so some optimum keeps every twin
    group in gain order (ties by index).
    """
    n = cost.shape[0]
    blockers: List[List[int]] = [[] for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            diff = cost[a] - cost[b]
            if float(diff.max() - diff.min()) > tol:
                continue
            first, second = (a, b) if gain[a] >= gain[b] else (b, a)
            blockers[second].append(first)
    return blockers


class _BranchAndBound:
    """Two passes over the position tree.

    The first pass finds the optimal cost, pruning twin orderings that cannot
    matter for the value. The second walks positions left to right and fixes
    the smallest item whose subtree still holds a feasible permutation at that
    cost, which yields the lexicographically smallest optimum.
    """

    def __init__(self, problem: RerankProblem) -> None:
        self.problem = problem
        self.n = problem.n
        self.cost = problem.cost
        self.gains = gains(problem.r_hat)
        disc = discounts(self.n)
        disc[problem.k:] = 0.0
        self.disc = disc
        self.target = problem.dcg_target
        self.tol = _tie_tolerance(problem)
        self.blockers = _twin_blockers(self.cost, self.gains, self.tol)
        self.nodes = 0

    def run(self) -> Reranking:
        # The original ranking always meets its own floor for theta <= 1.
        original = [int(i) for i in self.problem.original]
        best = self.problem.permutation_cost(original)
        best = min(best, self._lowest([], 0.0, 0.0, ceiling=best, enough=-math.inf))
        threshold = best + self.tol

        prefix: List[int] = []
        partial_cost = partial_dcg = 0.0
        for d in range(self.n):
            taken = set(prefix)
            for item in (i for i in range(self.n) if i not in taken):
                child_cost = partial_cost + self.cost[item, d]
                child_dcg = partial_dcg + self.gains[item] * self.disc[d]
                found = self._lowest(
                    prefix + [item], child_cost, child_dcg,
                    ceiling=threshold + self.tol, enough=threshold,
                )
                if found <= threshold:
                    prefix.append(item)
                    partial_cost, partial_dcg = child_cost, child_dcg
                    break
            else:
                raise SolverError("no permutation satisfies the DCG floor")

        logger.debug(
            "branch-and-bound: n=%s nodes=%s cost=%.6g", self.n, self.nodes, best
        )
        return Reranking(
            np.array(prefix, dtype=np.intp), cost=self.problem.permutation_cost(prefix)
        )

    def _lowest(
        self,
        prefix: List[int],
        partial_cost: float,
        partial_dcg: float,
        *,
        ceiling: float,
        enough: float,
    ) -> float:
        """Lowest feasible total cost below ``ceiling`` in the subtree of ``prefix``.

        Returns as soon as a cost at or below ``enough`` turns up, and
        ``math.inf`` when nothing beats the ceiling.
        """
        best = ceiling

        def visit(prefix: List[int], pc: float, pdcg: float) -> None:
            nonlocal best
            self.nodes += 1
            d = len(prefix)
            taken = set(prefix)
            remaining = [i for i in range(self.n) if i not in taken]
            if len(remaining) <= 1:
                perm = prefix + remaining
                if self.problem.is_feasible(perm):
                    best = min(best, self.problem.permutation_cost(perm))
                return

            rem = np.array(remaining, dtype=np.intp)
            reachable = float(np.sort(self.gains[rem])[::-1] @ self.disc[d:])
            if pdcg + reachable < self.target - 2 * DCG_TOLERANCE:
                return

            lower, completions = self._bound(prefix, rem, pdcg)
            for perm in completions:
                best = min(best, self.problem.permutation_cost(perm))
            if best <= enough or pc + lower >= best - self.tol:
                return

            placed = set(prefix)
            children = [
                i for i in remaining if all(b in placed for b in self.blockers[i])
            ]
            children.sort(key=lambda i: self.cost[i, d])
            for item in children:
                visit(
                    prefix + [item],
                    pc + self.cost[item, d],
                    pdcg + self.gains[item] * self.disc[d],
                )
                if best <= enough:
                    return

        visit(prefix, partial_cost, partial_dcg)
        return best if best < ceiling else math.inf

    def _complete(self, prefix: List[int], rem: np.ndarray, rows, cols) -> List[int]:
        d = len(prefix)
        perm = prefix + [0] * (self.n - d)
        for r, c in zip(rows, cols):
            perm[d + c] = int(rem[r])
        return perm

    def _bound(
        self, prefix: List[int], rem: np.ndarray, partial_dcg: float
    ) -> Tuple[float, List[List[int]]]:
        """Lower bound on the completion cost, plus feasible completions met on the way."""
        d = len(prefix)
        sub = self.cost[np.ix_(rem, np.arange(d, self.n))]
        gain = np.outer(self.gains[rem], self.disc[d:])
        need = self.target - partial_dcg
        completions: List[List[int]] = []

        rows, cols = linear_sum_assignment(sub)
        best = float(sub[rows, cols].sum())
        if float(gain[rows, cols].sum()) >= need - DCG_TOLERANCE:
            completions.append(self._complete(prefix, rem, rows, cols))
            return best, completions

        def dual(lam: float) -> bool:
            nonlocal best
            adjusted = sub - lam * gain
            r, c = linear_sum_assignment(adjusted)
            best = max(best, float(adjusted[r, c].sum()) + lam * need)
            if float(gain[r, c].sum()) >= need - DCG_TOLERANCE:
                completions.append(self._complete(prefix, rem, r, c))
                return True
            return False

        # A vanishing multiplier only breaks cost ties towards higher DCG.
        if dual(self.tol / (self.n * max(float(gain.max()), 1e-300))):
            return best, completions

        spread = float(sub.max() - sub.min())
        low, high = 0.0, max(spread, 1e-12) / max(float(gain.max()), 1e-300)
        for _ in range(_MAX_DOUBLINGS):
            if dual(high):
                break
            low, high = high, high * 2.0
        else:
            return best, completions
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (low + high)
            if dual(mid):
                high = mid
            else:
                low = mid
        return best, completions


def solve(problem: RerankProblem) -> Reranking:
    """Minimum-cost feasible permutation; lexicographically smallest among ties."""
    return _BranchAndBound(problem).run()


def brute_force(problem: RerankProblem) -> Reranking:
    """Enumerate all n! permutations (n <= 8) under the same tie-break as solve."""
    if problem.n > BRUTE_FORCE_MAX_N:
        raise ParameterError(
            f"brute force refuses n={problem.n} (limit {BRUTE_FORCE_MAX_N})"
        )
    feasible = [
        (problem.permutation_cost(perm), list(perm))
        for perm in itertools.permutations(range(problem.n))
        if problem.is_feasible(perm)
    ]
    if not feasible:
        raise SolverError("no permutation satisfies the DCG floor")
    threshold = min(c for c, _ in feasible) + _tie_tolerance(problem)
    # permutations() yields in lexicographic order.
    cost, perm = next((c, p) for c, p in feasible if c <= threshold)
    return Reranking(np.array(perm, dtype=np.intp), cost=cost)


def random_problem(
    rng: np.random.Generator,
    n: int,
    theta: float,
    scale: RatingScale = RatingScale(),
    xi_sd: float = 0.5,
) -> RerankProblem:
    """A random instance: uniform raw scores, Gaussian xi, random depth k."""
    profile = RelevanceProfile.from_raw(rng.uniform(scale.r_min, scale.r_max, n), scale)
    xi = rng.normal(0.0, xi_sd, n)
    k = int(rng.integers(1, n + 1))
    return build_problem(
        xi, profile.normalized, attention_weights(n), theta, k, profile.ranking
    )


def problem_for_profile(
    xi: Sequence[float],
    profile: RelevanceProfile,
    theta: float,
    k: int,
) -> Tuple[RerankProblem, np.ndarray]:
    """Build the problem a client solves for its own profile; returns (problem, w_hat)."""
    w_hat = attention_weights(profile.n)
    return build_problem(xi, profile.normalized, w_hat, theta, k, profile.ranking), w_hat

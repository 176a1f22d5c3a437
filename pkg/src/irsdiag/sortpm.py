"""Sorted posterior matching: the noisy-20-questions boundary estimator.

The generic engine searches for a hidden integer in {1..D} through an oracle
that answers set-membership questions and may lie with probability q < 1/2.
Queries take the top-posterior candidates whose cumulative mass is closest to
one half; answers update the posterior with Bayes factors (1-q)/q.

The surface specialization asks the over-the-air oracle whether a rectangle
boundary lies in a set of columns (or rows). Each of the four boundaries runs
the same minimum-boundary machinery; the two maxima run it on mirrored
indices, which flips the side probed in the second slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .airlink import InitEstimates
from .channel import ChannelSet
from .detect import DEFAULT_ALPHA, RegionQuery, answer_yk
from .grid import FailureScene

BOUNDARIES = ("h_min", "h_max", "v_min", "v_max")


@dataclass(frozen=True)
class PosteriorState:
    """Belief over the D candidate boundary positions after ``round`` answers."""

    probs: np.ndarray
    round: int = 0

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("posterior must be a nonempty vector")
        if np.any(probs < 0) or not np.isclose(probs.sum(), 1.0, atol=1e-9):
            raise ValueError("posterior entries must be nonnegative and sum to 1")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, d: int) -> "PosteriorState":
        return cls(np.full(d, 1.0 / d), round=0)

    @property
    def d(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class SortedView:
    """Posterior sorted in non-increasing order with its 1-based permutation."""

    order: np.ndarray
    sorted_probs: np.ndarray


def sorted_view(state: PosteriorState) -> SortedView:
    """Stable descending sort; ties keep ascending candidate order."""
    idx = np.argsort(-state.probs, kind="stable")
    return SortedView(order=idx + 1, sorted_probs=state.probs[idx])


@dataclass(frozen=True)
class QuerySet:
    """Candidate indices asked about in one round (1-based)."""

    members: frozenset[int]
    contiguous: bool

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(int(i) for i in self.members))
        if not self.members:
            raise ValueError("query set must be nonempty")


def _is_contiguous(members: frozenset[int]) -> bool:
    lo, hi = min(members), max(members)
    return len(members) == hi - lo + 1


def design_query(state: PosteriorState) -> QuerySet:
    """Top-l* posterior candidates with cumulative mass closest to one half.

    Ties in the sort break toward lower candidate index; ties in l* toward
    fewer members.
    """
    view = sorted_view(state)
    cumulative = np.cumsum(view.sorted_probs)
    l_star = int(np.argmin(np.abs(cumulative - 0.5))) + 1
    members = frozenset(int(i) for i in view.order[:l_star])
    return QuerySet(members=members, contiguous=_is_contiguous(members))


def posterior_update(
    state: PosteriorState, query: QuerySet, answer: int, q: float
) -> PosteriorState:
    """Bayes update for a possibly-lying yes/no answer.

    Answer 1 scales members by (1-q) and the rest by q; answer 0 swaps the
    roles. The result is renormalized.
    """
    if not 0.0 < q < 0.5:
        raise ValueError(f"lie probability must be in (0, 0.5), got {q}")
    if answer not in (0, 1):
        raise ValueError(f"answer must be a bit, got {answer!r}")
    member = np.zeros(state.d, dtype=bool)
    member[np.array(sorted(query.members)) - 1] = True
    in_factor, out_factor = ((1.0 - q), q) if answer == 1 else (q, (1.0 - q))
    weighted = state.probs * np.where(member, in_factor, out_factor)
    return PosteriorState(probs=weighted / weighted.sum(), round=state.round + 1)


@dataclass
class SortPMResult:
    estimate: int
    rounds: int
    converged: bool
    history: list[np.ndarray] = field(default_factory=list)
    queries: list[QuerySet] = field(default_factory=list)


def run_sortpm_generic(
    oracle: Callable[[QuerySet], int],
    d: int,
    q: float,
    epsilon: float,
    k_max: int,
    adjust_query: Callable[[QuerySet, PosteriorState], QuerySet] | None = None,
) -> SortPMResult:
    """Question until the top posterior reaches 1 - epsilon or k_max rounds.

    ``adjust_query`` may replace the designed query before it is asked (the
    surface estimator uses it to keep queries contiguous); the posterior is
    updated with the query actually asked.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    state = PosteriorState.uniform(d)
    history = [state.probs]
    queries: list[QuerySet] = []
    converged = bool(sorted_view(state).sorted_probs[0] >= 1.0 - epsilon)
    rounds = 0
    while not converged and rounds < k_max:
        query = design_query(state)
        if adjust_query is not None:
            query = adjust_query(query, state)
        answer = oracle(query)
        state = posterior_update(state, query, answer, q)
        rounds = state.round
        history.append(state.probs)
        queries.append(query)
        converged = bool(sorted_view(state).sorted_probs[0] >= 1.0 - epsilon)
    estimate = int(sorted_view(state).order[0])
    return SortPMResult(
        estimate=estimate,
        rounds=rounds,
        converged=converged,
        history=history,
        queries=queries,
    )


def singleton_fallback(query: QuerySet, state: PosteriorState) -> QuerySet:
    """Replace a non-contiguous query by the single most likely candidate."""
    if query.contiguous:
        return query
    top = int(sorted_view(state).order[0])
    return QuerySet(members=frozenset({top}), contiguous=True)


@dataclass
class BoundaryEstimate:
    boundary: str
    index: int
    rounds: int
    slots_used: int
    converged: bool
    fallbacks: int


def estimate_boundary_sortpm(
    boundary: str,
    scene: FailureScene,
    init: InitEstimates,
    ch: ChannelSet,
    rng: np.random.Generator | None,
    *,
    pilot: complex,
    q: float = 0.1,
    epsilon: float = 0.1,
    alpha: float = DEFAULT_ALPHA,
    k_max: int = 200,
    phases: tuple[float, float] = (0.0, np.pi),
) -> BoundaryEstimate:
    """Estimate one rectangle boundary from over-the-air answers.

    Candidate d maps to column/row d for the minima and to N+1-d for the
    maxima, so the maxima reuse the minimum-boundary search on a mirrored
    surface; the clean-side check flips from left-of to right-of the query.
    """
    if boundary not in BOUNDARIES:
        raise ValueError(f"unknown boundary {boundary!r}")
    orientation = "horizontal" if boundary.startswith("h") else "vertical"
    n_lines = ch.grid_shape[0] if orientation == "horizontal" else ch.grid_shape[1]
    mirrored = boundary.endswith("max")
    second_side = "right" if mirrored else "left"

    def to_real(candidates: frozenset[int]) -> frozenset[int]:
        if mirrored:
            return frozenset(n_lines + 1 - c for c in candidates)
        return frozenset(candidates)

    slots = 0
    fallbacks = 0

    def adjust(query: QuerySet, state: PosteriorState) -> QuerySet:
        nonlocal fallbacks
        adjusted = singleton_fallback(query, state)
        if adjusted is not query:
            fallbacks += 1
        return adjusted

    def oracle(query: QuerySet) -> int:
        nonlocal slots
        region = RegionQuery(to_real(query.members), orientation)
        answer, used = answer_yk(
            region,
            scene,
            init,
            ch,
            rng,
            pilot=pilot,
            phases=phases,
            alpha=alpha,
            second_side=second_side,
        )
        slots += used
        return answer

    result = run_sortpm_generic(
        oracle, n_lines, q=q, epsilon=epsilon, k_max=k_max, adjust_query=adjust
    )
    index = (n_lines + 1 - result.estimate) if mirrored else result.estimate
    return BoundaryEstimate(
        boundary=boundary,
        index=index,
        rounds=result.rounds,
        slots_used=slots,
        converged=result.converged,
        fallbacks=fallbacks,
    )

"""Three-phase bisection: the noiseless-20-questions boundary estimator.

Phase I halves a joint interval holding both the minimum and maximum boundary
until a cut straddles the cluster (Case 3). Phase II then binary-searches the
minimum on the low sub-interval and Phase III the maximum on the high one.
Verdicts are trusted as-is; a wrong verdict cuts the true boundary off for
good, which is the accepted cost of the method.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .airlink import InitEstimates
from .channel import ChannelSet
from .detect import (
    CASE_1,
    CASE_2,
    CASE_3,
    DEFAULT_ALPHA,
    BoundaryQuery,
    CaseVerdict,
    classify_boundary,
    probe_boundary,
)
from .grid import FailureScene

logger = logging.getLogger(__name__)


class Phase(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    DONE = "done"


@dataclass(frozen=True)
class BisectionState:
    """Integer bounds on (n_min, n_max) for one dimension."""

    lb_min: int
    ub_min: int
    lb_max: int
    ub_max: int
    phase: Phase
    slots_used: int = 0

    def __post_init__(self):
        if not (1 <= self.lb_min <= self.ub_min and 1 <= self.lb_max <= self.ub_max):
            raise ValueError(f"inconsistent bounds {self}")
        if self.phase is Phase.I and (
            self.lb_min != self.lb_max or self.ub_min != self.ub_max
        ):
            raise ValueError("Phase I requires joint min/max bounds")

    @classmethod
    def initial(cls, n_dim: int) -> "BisectionState":
        state = cls(1, n_dim, 1, n_dim, Phase.I)
        return _settle(state) if n_dim == 1 else state

    @property
    def resolved(self) -> tuple[int, int]:
        if self.phase is not Phase.DONE:
            raise ValueError("bounds not yet resolved")
        return self.lb_min, self.lb_max


def next_cut(state: BisectionState) -> float:
    """Midpoint cut for the active phase, nudged off integer positions."""
    if state.phase in (Phase.I, Phase.II):
        md = (state.lb_min + state.ub_min) / 2.0
    elif state.phase is Phase.III:
        md = (state.lb_max + state.ub_max) / 2.0
    else:
        raise ValueError("no cut once resolved")
    if float(md).is_integer():
        md += 0.5
    return md


def _settle(state: BisectionState) -> BisectionState:
    """Advance through phases whose interval is already a single index."""
    if state.phase is Phase.I and state.lb_min == state.ub_min:
        state = replace(state, phase=Phase.II)
    if state.phase is Phase.II and state.lb_min == state.ub_min:
        state = replace(state, phase=Phase.III)
    if state.phase is Phase.III and state.lb_max == state.ub_max:
        state = replace(state, phase=Phase.DONE)
    return state


def _admissible_label(state: BisectionState, verdict: CaseVerdict) -> str:
    """Coerce verdicts the phase cannot act on to the best admissible one.

    Case 1 cannot occur once the minimum is being isolated, nor Case 2 once
    the maximum is; under noise the detector may still emit them. The claim is
    re-decided between the phase's point hypothesis and Case 3 using the
    stored evidence.
    """
    label = verdict.label
    if state.phase is Phase.II and label == CASE_1:
        label = CASE_2 if verdict.passes(CASE_2) else CASE_3
        logger.debug("Phase II verdict Case 1 coerced to Case %s", label)
    elif state.phase is Phase.III and label == CASE_2:
        label = CASE_1 if verdict.passes(CASE_1) else CASE_3
        logger.debug("Phase III verdict Case 2 coerced to Case %s", label)
    return label


def bisection_step(state: BisectionState, verdict: CaseVerdict) -> BisectionState:
    """Apply one verdict taken at ``next_cut(state)`` and advance the phase."""
    if state.phase is Phase.DONE:
        raise ValueError("bisection already resolved")
    md = next_cut(state)
    lo, hi = math.floor(md), math.ceil(md)
    label = _admissible_label(state, verdict)
    state = replace(state, slots_used=state.slots_used + 1)

    if state.phase is Phase.I:
        if label == CASE_1:
            state = replace(state, ub_min=lo, ub_max=lo)
        elif label == CASE_2:
            state = replace(state, lb_min=hi, lb_max=hi)
        else:
            state = replace(state, ub_min=lo, lb_max=hi, phase=Phase.II)
    elif state.phase is Phase.II:
        if label == CASE_2:
            state = replace(state, lb_min=hi)
        else:
            state = replace(state, ub_min=lo)
    else:  # Phase III
        if label == CASE_1:
            state = replace(state, ub_max=lo)
        else:
            state = replace(state, lb_max=hi)

    if state.phase is Phase.I and state.lb_min == state.ub_min:
        # Joint interval collapsed without ever straddling: a single line.
        state = replace(state, phase=Phase.DONE)
        return state
    return _settle(state)


@dataclass
class ThreePhaseResult:
    n_min: int
    n_max: int
    slots_used: int
    cuts: list[float] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    states: list[BisectionState] = field(default_factory=list)


def drive_three_phase(
    n_dim: int, classify: Callable[[float, BisectionState], CaseVerdict]
) -> ThreePhaseResult:
    """Run the state machine against any verdict source (radio or oracle)."""
    state = BisectionState.initial(n_dim)
    result = ThreePhaseResult(n_min=0, n_max=0, slots_used=0, states=[state])
    while state.phase is not Phase.DONE:
        cut = next_cut(state)
        verdict = classify(cut, state)
        state = bisection_step(state, verdict)
        result.cuts.append(cut)
        result.labels.append(verdict.label)
        result.states.append(state)
    result.n_min, result.n_max = state.resolved
    result.slots_used = state.slots_used
    return result


def run_three_phase(
    dimension: str,
    scene: FailureScene,
    init: InitEstimates,
    ch: ChannelSet,
    rng: np.random.Generator | None,
    *,
    pilot: complex,
    alpha: float = DEFAULT_ALPHA,
    phases: tuple[float, float] = (0.0, np.pi),
) -> ThreePhaseResult:
    """Estimate (n_min, n_max) in one dimension over the air.

    One measurement per iteration: split the surface at the cut, classify,
    update the bounds.
    """
    if dimension not in ("horizontal", "vertical"):
        raise ValueError(f"unknown dimension {dimension!r}")
    n_dim = ch.grid_shape[0] if dimension == "horizontal" else ch.grid_shape[1]

    def classify(cut: float, state: BisectionState) -> CaseVerdict:
        bq = BoundaryQuery(cut=cut, orientation=dimension)
        meas = probe_boundary(
            scene, bq, ch, pilot, phases, rng, slot_tag=f"cut{cut}"
        )
        return classify_boundary(meas, init, bq, ch, phases, alpha)

    return drive_three_phase(n_dim, classify)

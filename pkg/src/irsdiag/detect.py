"""Region and boundary hypothesis tests on single pilot measurements.

Every test reduces to a residual-energy check: under the hypothesized layout
the measurement minus the model is pure noise, so ||r||^2 is compared with a
chi-square quantile of the null residual energy. The null residual carries
both the current slot's noise and the (known, closed-form) noise propagated
through the initialization estimates; the latter inflates the variance by a
factor 1 + kappa computed in ``init_noise_inflation``.

With zero noise power the tests fall back to an absolute numerical floor so
that exact model matches classify correctly despite float rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .airlink import InitEstimates, Measurement, received_signal
from .channel import ChannelSet
from .grid import FailureScene, PhaseAssignment

# Residuals below (this * signal scale)^2 count as an exact model match.
RESIDUAL_FLOOR_REL = 1e-8

DEFAULT_ALPHA = 1e-3

CASE_A = "A"
CASE_B = "B"
CASE_1 = "1"
CASE_2 = "2"
CASE_3 = "3"


@dataclass(frozen=True)
class RegionQuery:
    """Column (or row) sub-region probed in one slot."""

    indices: frozenset[int]
    orientation: str = "horizontal"

    def __post_init__(self):
        object.__setattr__(self, "indices", frozenset(int(i) for i in self.indices))
        if not self.indices:
            raise ValueError("query region must be nonempty")
        if self.orientation not in ("horizontal", "vertical"):
            raise ValueError(f"unknown orientation {self.orientation!r}")


@dataclass(frozen=True)
class BoundaryQuery:
    """Half-integer cut separating low-index from high-index lines."""

    cut: float
    orientation: str = "horizontal"

    def __post_init__(self):
        if float(self.cut).is_integer():
            raise ValueError(f"cut {self.cut} must lie between element indices")
        if self.orientation not in ("horizontal", "vertical"):
            raise ValueError(f"unknown orientation {self.orientation!r}")


@dataclass(frozen=True)
class CaseVerdict:
    """Decision plus the evidence it was made from.

    ``energies`` holds the model residual energy per hypothesis,
    ``thresholds`` the acceptance bound per hypothesis, and ``logliks`` the
    Gaussian log-density per hypothesis (None when noise power is zero).
    """

    label: str
    energies: dict[str, float]
    thresholds: dict[str, float]
    logliks: dict[str, float | None]

    def passes(self, hypothesis: str) -> bool:
        return self.energies[hypothesis] <= self.thresholds[hypothesis]


def truth_verdict(label: str) -> CaseVerdict:
    """Ground-truth verdict for oracle-driven runs and tests."""
    hypotheses = {CASE_A, CASE_B} if label in (CASE_A, CASE_B) else {CASE_1, CASE_2, CASE_3}
    if label not in hypotheses:
        raise ValueError(f"unknown case label {label!r}")
    energies = {hyp: (0.0 if hyp == label else math.inf) for hyp in hypotheses}
    thresholds = {hyp: 1.0 for hyp in hypotheses}
    logliks: dict[str, float | None] = {hyp: None for hyp in hypotheses}
    return CaseVerdict(label=label, energies=energies, thresholds=thresholds, logliks=logliks)


def init_noise_inflation(init: InitEstimates, pilot: complex, model_phase: float) -> float:
    """Variance inflation kappa of the null residual due to init noise.

    The model subtracts g_e_hat * x and (g_w_hat - known) * e^{j model_phase}
    * x; both estimates carry the two initialization noise draws. Under a true
    hypothesis the residual is CN(0, (1 + kappa) sigma^2 I) with

      kappa = |x|^2 (|x+|^2 |e^{j p+} - e^{j pw}|^2 + |x-|^2 |e^{j pw} - e^{j p-}|^2)
              / |x- x+ (e^{j p+} - e^{j p-})|^2

    where pw is the phase attached to the g_w_hat-derived aggregate. With
    equal pilot magnitudes and pi-separated phases this is exactly 1.
    """
    x_minus, x_plus = init.pilots_used
    p_minus, p_plus = init.phases_used
    e_minus = np.exp(1j * p_minus)
    e_plus = np.exp(1j * p_plus)
    e_w = np.exp(1j * model_phase)
    den = abs(x_minus * x_plus * (e_plus - e_minus)) ** 2
    num = abs(x_plus) ** 2 * abs(e_plus - e_w) ** 2 + abs(x_minus) ** 2 * abs(e_w - e_minus) ** 2
    return float(abs(pilot) ** 2 * num / den)


def residual_threshold(
    noise_power: float,
    m_antennas: int,
    alpha: float,
    inflation: float,
    floor_scale: float,
) -> float:
    """Acceptance bound on the residual energy at false-reject rate alpha.

    ||r||^2 / (v/2) is chi-square with 2M degrees of freedom under the null,
    with v = (1 + inflation) * sigma^2 the effective per-antenna variance.
    """
    floor = (RESIDUAL_FLOOR_REL * floor_scale) ** 2
    if noise_power <= 0:
        return floor
    effective = noise_power * (1.0 + inflation)
    return float(0.5 * effective * chi2.ppf(1.0 - alpha, 2 * m_antennas) + floor)


def _floor_scale(meas: Measurement, ch: ChannelSet) -> float:
    return float(np.linalg.norm(meas.y) + abs(meas.pilot) * np.linalg.norm(ch.h))


def region_aggregate(ch: ChannelSet, query: RegionQuery) -> np.ndarray:
    """(M,) cascade sum over the full columns (or rows) of the query."""
    idx = np.array(sorted(query.indices)) - 1
    totals = ch.column_totals if query.orientation == "horizontal" else ch.row_totals
    if idx.min() < 0 or idx.max() >= totals.shape[0]:
        raise IndexError(f"query indices {sorted(query.indices)} outside grid")
    return totals[idx].sum(axis=0)


def _model_residual_energy(
    meas: Measurement,
    init: InitEstimates,
    ch: ChannelSet,
    known_sum: np.ndarray,
    phase_known: float,
    phase_rest: float,
) -> float:
    """||y - (h + g_e_hat + known e^{j pk} + (g_w_hat - known) e^{j pr}) x||^2."""
    if meas.m_antennas != ch.m_antennas:
        raise ValueError("measurement and channel antenna counts differ")
    model = (
        ch.h
        + init.g_e_hat
        + known_sum * np.exp(1j * phase_known)
        + (init.g_w_hat - known_sum) * np.exp(1j * phase_rest)
    ) * meas.pilot
    r = meas.y - model
    return float(np.real(np.vdot(r, r)))


def region_residual_energy(
    meas: Measurement,
    init: InitEstimates,
    query: RegionQuery,
    ch: ChannelSet,
    phases: tuple[float, float],
) -> float:
    """Residual energy of the all-normal-region model."""
    phase_in, phase_out = phases
    g_in = region_aggregate(ch, query)
    return _model_residual_energy(meas, init, ch, g_in, phase_in, phase_out)


def loglik_region_normal(
    meas: Measurement,
    init: InitEstimates,
    query: RegionQuery,
    ch: ChannelSet,
    phases: tuple[float, float],
) -> float:
    """Log density of the measurement under the all-normal-region model."""
    if ch.noise_power <= 0:
        raise ValueError("log-likelihood undefined at zero noise power")
    energy = region_residual_energy(meas, init, query, ch, phases)
    m = ch.m_antennas
    return float(-m * np.log(np.pi * ch.noise_power) - energy / ch.noise_power)


def _loglik_from_energy(energy: float, ch: ChannelSet) -> float | None:
    if ch.noise_power <= 0:
        return None
    m = ch.m_antennas
    return float(-m * np.log(np.pi * ch.noise_power) - energy / ch.noise_power)


def classify_region(
    meas: Measurement,
    init: InitEstimates,
    query: RegionQuery,
    ch: ChannelSet,
    phases: tuple[float, float],
    alpha: float = DEFAULT_ALPHA,
) -> CaseVerdict:
    """Case A (no stuck elements in the region) versus Case B."""
    phase_in, phase_out = phases
    if np.isclose(np.exp(1j * phase_in), np.exp(1j * phase_out)).all():
        raise ValueError("in/out probing phases must differ")
    energy = region_residual_energy(meas, init, query, ch, phases)
    kappa = init_noise_inflation(init, meas.pilot, phase_out)
    tau = residual_threshold(
        ch.noise_power, ch.m_antennas, alpha, kappa, _floor_scale(meas, ch)
    )
    label = CASE_A if energy <= tau else CASE_B
    loglik = _loglik_from_energy(energy, ch)
    return CaseVerdict(
        label=label,
        energies={CASE_A: energy},
        thresholds={CASE_A: tau},
        logliks={CASE_A: loglik},
    )


def probe_region(
    scene: FailureScene,
    query: RegionQuery,
    ch: ChannelSet,
    pilot: complex,
    phases: tuple[float, float],
    rng: np.random.Generator | None,
    slot_tag: str = "",
) -> Measurement:
    """Transmit one slot with phase_in on the query lines, phase_out outside."""
    phase_in, phase_out = phases
    if query.orientation == "horizontal":
        assign = PhaseAssignment.split_columns(
            scene.dims, query.indices, phase_in, phase_out
        )
    else:
        assign = PhaseAssignment.split_rows(scene.dims, query.indices, phase_in, phase_out)
    return received_signal(scene, assign, ch, pilot, rng, slot_tag)


def answer_yk(
    query: RegionQuery,
    scene: FailureScene,
    init: InitEstimates,
    ch: ChannelSet,
    rng: np.random.Generator | None,
    pilot: complex,
    phases: tuple[float, float],
    alpha: float = DEFAULT_ALPHA,
    second_side: str = "left",
) -> tuple[int, int]:
    """Answer "is the searched boundary inside the query?" in one or two slots.

    Slot 1 probes the query region; Case A means the region is clean, so the
    boundary cannot be there (answer 0, one slot). Otherwise a second slot
    probes everything on ``second_side`` of the query; the answer is 1 only if
    that side is clean. An empty side region is vacuously clean and costs no
    slot.
    """
    indices = sorted(query.indices)
    if indices != list(range(indices[0], indices[-1] + 1)):
        raise ValueError("query indices must be consecutive")
    n_lines = (
        ch.grid_shape[0] if query.orientation == "horizontal" else ch.grid_shape[1]
    )

    meas = probe_region(scene, query, ch, pilot, phases, rng, slot_tag="q")
    verdict = classify_region(meas, init, query, ch, phases, alpha)
    if verdict.label == CASE_A:
        return 0, 1

    if second_side == "left":
        side = range(1, indices[0])
    elif second_side == "right":
        side = range(indices[-1] + 1, n_lines + 1)
    else:
        raise ValueError(f"unknown side {second_side!r}")
    if len(side) == 0:
        return 1, 1
    side_query = RegionQuery(frozenset(side), query.orientation)
    side_meas = probe_region(scene, side_query, ch, pilot, phases, rng, slot_tag="qside")
    side_verdict = classify_region(side_meas, init, side_query, ch, phases, alpha)
    return (1 if side_verdict.label == CASE_A else 0), 2


def boundary_aggregates(
    ch: ChannelSet, bq: BoundaryQuery
) -> tuple[np.ndarray, np.ndarray]:
    """(low side, high side) cascade sums across the cut."""
    totals = ch.column_totals if bq.orientation == "horizontal" else ch.row_totals
    n = totals.shape[0]
    if not (1 < bq.cut < n):
        raise ValueError(f"cut {bq.cut} outside (1, {n})")
    low = totals[: math.floor(bq.cut)].sum(axis=0)
    high = totals[math.floor(bq.cut):].sum(axis=0)
    return low, high


def classify_boundary(
    meas: Measurement,
    init: InitEstimates,
    bq: BoundaryQuery,
    ch: ChannelSet,
    phases: tuple[float, float],
    alpha: float = DEFAULT_ALPHA,
) -> CaseVerdict:
    """Case 1 (cluster fully below the cut), Case 2 (fully above), or Case 3.

    Case 1 models the high side as all normal, Case 2 the low side; Case 3 is
    declared when neither model fits. If both fit, the better likelihood wins.
    """
    phase_low, phase_high = phases
    low_sum, high_sum = boundary_aggregates(ch, bq)

    # Case 1: known-clean side is the high side, g_w remainder gets phase_low.
    e1 = _model_residual_energy(meas, init, ch, high_sum, phase_high, phase_low)
    k1 = init_noise_inflation(init, meas.pilot, phase_low)
    # Case 2: mirrored.
    e2 = _model_residual_energy(meas, init, ch, low_sum, phase_low, phase_high)
    k2 = init_noise_inflation(init, meas.pilot, phase_high)

    scale = _floor_scale(meas, ch)
    t1 = residual_threshold(ch.noise_power, ch.m_antennas, alpha, k1, scale)
    t2 = residual_threshold(ch.noise_power, ch.m_antennas, alpha, k2, scale)

    pass1 = e1 <= t1
    pass2 = e2 <= t2
    if pass1 and pass2:
        label = CASE_1 if e1 <= e2 else CASE_2
    elif pass1:
        label = CASE_1
    elif pass2:
        label = CASE_2
    else:
        label = CASE_3
    return CaseVerdict(
        label=label,
        energies={CASE_1: e1, CASE_2: e2},
        thresholds={CASE_1: t1, CASE_2: t2},
        logliks={CASE_1: _loglik_from_energy(e1, ch), CASE_2: _loglik_from_energy(e2, ch)},
    )


def probe_boundary(
    scene: FailureScene,
    bq: BoundaryQuery,
    ch: ChannelSet,
    pilot: complex,
    phases: tuple[float, float],
    rng: np.random.Generator | None,
    slot_tag: str = "",
) -> Measurement:
    """Transmit one slot with phase_low below the cut and phase_high above."""
    phase_low, phase_high = phases
    assign = PhaseAssignment.split_at_cut(
        scene.dims, bq.cut, bq.orientation, phase_low, phase_high
    )
    return received_signal(scene, assign, ch, pilot, rng, slot_tag)

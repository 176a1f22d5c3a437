"""Pilot transmission, noisy reception, and the two-slot initialization stage.

The initialization stage probes the surface twice with uniform commanded
phases and solves the 2M linear equations for the aggregate stuck cascade
(g_e) and the aggregate normal cascade (g_w) in closed form. Those estimates
feed every later region/boundary test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .grid import FailureScene, PhaseAssignment, realized_coefficients


@dataclass(frozen=True)
class Measurement:
    """One received pilot snapshot across the M antennas."""

    y: np.ndarray
    pilot: complex
    slot_tag: str = ""

    def __post_init__(self):
        y = np.array(self.y, dtype=complex)
        if y.ndim != 1:
            raise ValueError("measurement must be a length-M vector")
        y.flags.writeable = False
        object.__setattr__(self, "y", y)

    @property
    def m_antennas(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class InitEstimates:
    """Closed-form ML estimates from the two uniform-phase slots."""

    g_e_hat: np.ndarray
    g_w_hat: np.ndarray
    phases_used: tuple[float, float]
    pilots_used: tuple[complex, complex]

    def __post_init__(self):
        for name in ("g_e_hat", "g_w_hat"):
            vec = np.array(getattr(self, name), dtype=complex)
            vec.flags.writeable = False
            object.__setattr__(self, name, vec)


def received_signal(
    scene: FailureScene,
    assign: PhaseAssignment,
    ch: ChannelSet,
    pilot: complex,
    rng: np.random.Generator | None = None,
    slot_tag: str = "",
) -> Measurement:
    """y = (h + sum_elements theta * g) * pilot + z.

    Stuck elements contribute with their frozen coefficients, normal elements
    with the commanded ones. z is circularly-symmetric complex Gaussian with
    per-antenna variance ch.noise_power; rng=None yields the noiseless signal.
    """
    theta = realized_coefficients(scene, assign)
    reflected = np.tensordot(theta, ch.g, axes=([0, 1], [0, 1]))
    y = (ch.h + reflected) * pilot
    if rng is not None and ch.noise_power > 0:
        scale = np.sqrt(ch.noise_power / 2.0)
        m = ch.m_antennas
        y = y + scale * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return Measurement(y=y, pilot=pilot, slot_tag=slot_tag)


def true_defective_cascade(scene: FailureScene, ch: ChannelSet) -> np.ndarray:
    """sum over stuck elements of e^{j*beta} g (the quantity g_e estimates)."""
    return np.tensordot(scene.stuck_coefficients, ch.g, axes=([0, 1], [0, 1]))


def true_normal_cascade(scene: FailureScene, ch: ChannelSet) -> np.ndarray:
    """sum over normal elements of g (the quantity g_w estimates)."""
    return np.tensordot(~scene.stuck_mask, ch.g, axes=([0, 1], [0, 1]))


def run_initialization(
    scene: FailureScene,
    ch: ChannelSet,
    pilots: tuple[complex, complex],
    phases: tuple[float, float],
    rng: np.random.Generator | None = None,
) -> InitEstimates:
    """Transmit the two uniform-phase slots and solve for g_e and g_w.

    With y_- and y_+ the two received vectors,

      g_e = [e^{j p+} x+ (y_- - h x_-) - e^{j p-} x- (y_+ - h x_+)] / d
      g_w = [x- (y_+ - h x_+) - x+ (y_- - h x_-)] / d
      d   = x- x+ (e^{j p+} - e^{j p-})
    """
    x_minus, x_plus = pilots
    phi_minus, phi_plus = phases
    if x_minus == 0 or x_plus == 0:
        raise ValueError("initialization pilots must be nonzero")
    e_minus = np.exp(1j * phi_minus)
    e_plus = np.exp(1j * phi_plus)
    denom = x_minus * x_plus * (e_plus - e_minus)
    if abs(denom) < 1e-15 * abs(x_minus * x_plus):
        raise ValueError("initialization phases must differ")

    meas_minus = received_signal(
        scene, PhaseAssignment.uniform(scene.dims, phi_minus), ch, x_minus, rng, "0-"
    )
    meas_plus = received_signal(
        scene, PhaseAssignment.uniform(scene.dims, phi_plus), ch, x_plus, rng, "0+"
    )
    resid_minus = meas_minus.y - ch.h * x_minus
    resid_plus = meas_plus.y - ch.h * x_plus
    g_e = (e_plus * x_plus * resid_minus - e_minus * x_minus * resid_plus) / denom
    g_w = (x_minus * resid_plus - x_plus * resid_minus) / denom
    return InitEstimates(
        g_e_hat=g_e,
        g_w_hat=g_w,
        phases_used=(float(phi_minus), float(phi_plus)),
        pilots_used=(complex(x_minus), complex(x_plus)),
    )

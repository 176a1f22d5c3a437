"""Near-field line-of-sight channel synthesis for the diagnosis chamber.

All channels are deterministic functions of geometry: each path contributes a
unit-modulus phasor e^{-j 2 pi d / lambda} scaled by a configurable path-loss
gain. The cascade through element (n_h, n_v) is g = u * r with u the
transmitter-to-element coefficient and r the element-to-receiver vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import GridDims


class DegenerateGeometryError(ValueError):
    """Raised when two radio endpoints coincide."""


@dataclass(frozen=True)
class Geometry:
    """Positions (meters) of transmitter, receive array, and IRS elements."""

    tx_pos: np.ndarray            # (3,)
    rx_antenna_pos: np.ndarray    # (M, 3)
    irs_element_pos: np.ndarray   # (n_h, n_v, 3)
    wavelength: float

    def __post_init__(self):
        tx = np.array(self.tx_pos, dtype=float).reshape(3)
        rx = np.array(self.rx_antenna_pos, dtype=float)
        irs = np.array(self.irs_element_pos, dtype=float)
        if rx.ndim != 2 or rx.shape[1] != 3 or rx.shape[0] < 1:
            raise ValueError("rx_antenna_pos must be (M, 3) with M >= 1")
        if irs.ndim != 3 or irs.shape[2] != 3:
            raise ValueError("irs_element_pos must be (n_h, n_v, 3)")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        for arr in (tx, rx, irs):
            arr.flags.writeable = False
        object.__setattr__(self, "tx_pos", tx)
        object.__setattr__(self, "rx_antenna_pos", rx)
        object.__setattr__(self, "irs_element_pos", irs)

    @property
    def m_antennas(self) -> int:
        return self.rx_antenna_pos.shape[0]

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.irs_element_pos.shape[:2]


def default_geometry(
    dims: GridDims,
    m_antennas: int,
    wavelength: float = 0.1,
    element_pitch: float | None = None,
    tx_pos=(1.5, -1.0, 0.0),
    rx_center=(1.5, 1.0, 0.0),
    rx_pitch: float | None = None,
) -> Geometry:
    """Anechoic-chamber layout: IRS in the y-z plane centered at the origin,
    half-wavelength element pitch, transmitter and a half-wavelength-pitch
    linear receive array (along y) on the same side of the surface.
    """
    pitch = wavelength / 2 if element_pitch is None else element_pitch
    rxp = wavelength / 2 if rx_pitch is None else rx_pitch
    cols = (np.arange(1, dims.n_h + 1) - (dims.n_h + 1) / 2) * pitch
    rows = (np.arange(1, dims.n_v + 1) - (dims.n_v + 1) / 2) * pitch
    irs = np.zeros((dims.n_h, dims.n_v, 3))
    irs[:, :, 1] = cols[:, None]
    irs[:, :, 2] = rows[None, :]
    offsets = (np.arange(1, m_antennas + 1) - (m_antennas + 1) / 2) * rxp
    rx = np.array(rx_center, dtype=float)[None, :] + np.outer(offsets, [0.0, 1.0, 0.0])
    return Geometry(
        tx_pos=np.array(tx_pos, dtype=float),
        rx_antenna_pos=rx,
        irs_element_pos=irs,
        wavelength=wavelength,
    )


@dataclass(frozen=True)
class ChannelSet:
    """Direct channel h (M,), per-element cascades g (n_h, n_v, M), and the
    receiver noise power sigma^2 in linear watts (0 allowed for oracle runs).
    """

    h: np.ndarray
    g: np.ndarray
    noise_power: float

    def __post_init__(self):
        h = np.array(self.h, dtype=complex)
        g = np.array(self.g, dtype=complex)
        if h.ndim != 1 or g.ndim != 3 or g.shape[2] != h.shape[0]:
            raise ValueError("h must be (M,) and g (n_h, n_v, M)")
        if self.noise_power < 0:
            raise ValueError("noise power must be non-negative")
        h.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)

    @property
    def m_antennas(self) -> int:
        return self.h.shape[0]

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.g.shape[:2]

    @cached_property
    def column_totals(self) -> np.ndarray:
        """(n_h, M) cascade sums over each column."""
        totals = self.g.sum(axis=1)
        totals.flags.writeable = False
        return totals

    @cached_property
    def row_totals(self) -> np.ndarray:
        """(n_v, M) cascade sums over each row."""
        totals = self.g.sum(axis=0)
        totals.flags.writeable = False
        return totals

    @cached_property
    def grand_total(self) -> np.ndarray:
        """(M,) cascade sum over the whole surface."""
        total = self.g.sum(axis=(0, 1))
        total.flags.writeable = False
        return total

    def with_noise_power(self, noise_power: float) -> "ChannelSet":
        return ChannelSet(h=self.h, g=self.g, noise_power=noise_power)


def synthesize_channels(
    geom: Geometry,
    pathloss_tr: float,
    pathloss_ir: float,
    pathloss_ti: float,
    noise_power: float,
) -> ChannelSet:
    """Build the deterministic near-field LOS channel set from geometry.

    h_m   = a_TR * e^{-j 2 pi ||tx - rx_m|| / lambda}
    r_m   = a_IR * e^{-j 2 pi ||irs - rx_m|| / lambda}   (per element)
    u     = a_TI * e^{-j 2 pi ||tx - irs|| / lambda}     (per element)
    g     = u * r
    """
    if min(pathloss_tr, pathloss_ir, pathloss_ti) <= 0:
        raise ValueError("path-loss gains must be positive")
    lam = geom.wavelength
    tx = geom.tx_pos
    rx = geom.rx_antenna_pos
    irs = geom.irs_element_pos

    d_tr = np.linalg.norm(tx[None, :] - rx, axis=1)                        # (M,)
    d_ti = np.linalg.norm(irs - tx[None, None, :], axis=2)                 # (n_h, n_v)
    d_ir = np.linalg.norm(irs[:, :, None, :] - rx[None, None, :, :], axis=3)  # (n_h, n_v, M)
    if min(d_tr.min(), d_ti.min(), d_ir.min()) <= 0:
        raise DegenerateGeometryError("coincident transmitter/receiver/element positions")

    k = 2.0 * np.pi / lam
    h = pathloss_tr * np.exp(-1j * k * d_tr)
    u = pathloss_ti * np.exp(-1j * k * d_ti)
    r = pathloss_ir * np.exp(-1j * k * d_ir)
    g = u[:, :, None] * r
    return ChannelSet(h=h, g=g, noise_power=noise_power)

"""IRS element grid, clustered stuck-element ground truth, and realized phases.

Elements are indexed 1-based as (column, row), column-major like an engineer
reading the surface: element (n_h, n_v) sits in column n_h and row n_v.
Internally arrays are indexed [n_h - 1, n_v - 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping

import numpy as np

TWO_PI = 2.0 * np.pi


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridDims:
    """Surface layout: n_h columns by n_v rows, both powers of two."""

    n_h: int
    n_v: int

    def __post_init__(self):
        if not (_is_power_of_two(self.n_h) and _is_power_of_two(self.n_v)):
            raise ValueError(
                f"grid sides must be powers of two, got {self.n_h}x{self.n_v}"
            )

    @property
    def n_elements(self) -> int:
        return self.n_h * self.n_v

    def contains(self, element: tuple[int, int]) -> bool:
        col, row = element
        return 1 <= col <= self.n_h and 1 <= row <= self.n_v

    def elements(self) -> Iterator[tuple[int, int]]:
        for col in range(1, self.n_h + 1):
            for row in range(1, self.n_v + 1):
                yield (col, row)


@dataclass(frozen=True)
class DefectRect:
    """Axis-aligned rectangle of element indices, inclusive on all sides."""

    h_min: int
    h_max: int
    v_min: int
    v_max: int

    def __post_init__(self):
        if not (1 <= self.h_min <= self.h_max and 1 <= self.v_min <= self.v_max):
            raise ValueError(f"invalid defect rectangle {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.h_min, self.h_max, self.v_min, self.v_max)

    @property
    def width(self) -> int:
        return self.h_max - self.h_min + 1

    @property
    def height(self) -> int:
        return self.v_max - self.v_min + 1

    def covers(self, element: tuple[int, int]) -> bool:
        col, row = element
        return self.h_min <= col <= self.h_max and self.v_min <= row <= self.v_max

    def elements(self) -> Iterator[tuple[int, int]]:
        for col in range(self.h_min, self.h_max + 1):
            for row in range(self.v_min, self.v_max + 1):
                yield (col, row)


class NoDefectError(ValueError):
    """Raised when a defect rectangle is requested for an all-normal mask."""


def bounding_rectangle(mask: np.ndarray) -> DefectRect:
    """Smallest DefectRect covering every true entry of a (n_h, n_v) mask."""
    mask = np.asarray(mask, dtype=bool)
    cols, rows = np.nonzero(mask)
    if cols.size == 0:
        raise NoDefectError("mask has no defective elements")
    return DefectRect(
        h_min=int(cols.min()) + 1,
        h_max=int(cols.max()) + 1,
        v_min=int(rows.min()) + 1,
        v_max=int(rows.max()) + 1,
    )


@dataclass(frozen=True)
class FailureScene:
    """Ground truth for one diagnosis run.

    ``stuck_phase`` maps each stuck element (n_h, n_v) to its frozen phase in
    (0, 2*pi]; phases never change over the scene's lifetime. For rectangular
    failures the keys are exactly the rectangle; for free-form clusters
    (``from_mask``) the keys are the true stuck elements and ``defect`` is
    their bounding rectangle, which is the diagnosis target.
    """

    dims: GridDims
    defect: DefectRect
    stuck_phase: Mapping[tuple[int, int], float]

    def __post_init__(self):
        if not self.stuck_phase:
            raise ValueError("scene must contain at least one stuck element")
        for element, beta in self.stuck_phase.items():
            if not self.dims.contains(element):
                raise ValueError(f"stuck element {element} outside grid")
            if not self.defect.covers(element):
                raise ValueError(f"stuck element {element} outside defect rectangle")
            if not (0.0 < beta <= TWO_PI):
                raise ValueError(f"stuck phase {beta} for {element} not in (0, 2*pi]")
        if not (self.defect.h_max <= self.dims.n_h and self.defect.v_max <= self.dims.n_v):
            raise ValueError("defect rectangle exceeds grid")
        if bounding_rectangle(self.stuck_mask) != self.defect:
            raise ValueError("defect rectangle is not the bounding box of stuck elements")

    @classmethod
    def rectangular(
        cls,
        dims: GridDims,
        defect: DefectRect,
        phases: Mapping[tuple[int, int], float] | None = None,
        rng: np.random.Generator | None = None,
    ) -> "FailureScene":
        """Scene whose stuck set is exactly ``defect``.

        Missing phases are sampled uniformly on (0, 2*pi] from ``rng``.
        """
        if phases is None:
            if rng is None:
                raise ValueError("provide either explicit phases or an rng")
            phases = {
                el: float(TWO_PI * (1.0 - rng.uniform())) for el in defect.elements()
            }
        missing = set(defect.elements()) - set(phases)
        if missing:
            raise ValueError(f"missing stuck phases for {sorted(missing)}")
        extra = set(phases) - set(defect.elements())
        if extra:
            raise ValueError(f"stuck phases given outside rectangle: {sorted(extra)}")
        return cls(dims=dims, defect=defect, stuck_phase=dict(phases))

    @classmethod
    def from_mask(
        cls,
        dims: GridDims,
        mask: np.ndarray,
        phases: Mapping[tuple[int, int], float] | None = None,
        rng: np.random.Generator | None = None,
    ) -> "FailureScene":
        """Free-form cluster; the diagnosis target is its bounding rectangle."""
        mask = np.asarray(mask, dtype=bool)
        columns, rows = np.nonzero(mask)
        elements = [(int(c) + 1, int(r) + 1) for c, r in zip(columns, rows)]
        if phases is None:
            if rng is None:
                raise ValueError("provide either explicit phases or an rng")
            phases = {el: float(TWO_PI * (1.0 - rng.uniform())) for el in elements}
        return cls(dims=dims, defect=bounding_rectangle(mask), stuck_phase=dict(phases))

    @cached_property
    def stuck_mask(self) -> np.ndarray:
        """(n_h, n_v) boolean array of stuck elements (read-only)."""
        mask = np.zeros((self.dims.n_h, self.dims.n_v), dtype=bool)
        for col, row in self.stuck_phase:
            mask[col - 1, row - 1] = True
        mask.flags.writeable = False
        return mask

    @cached_property
    def stuck_coefficients(self) -> np.ndarray:
        """(n_h, n_v) complex array: e^{j*beta} at stuck elements, 0 elsewhere."""
        coeff = np.zeros((self.dims.n_h, self.dims.n_v), dtype=complex)
        for (col, row), beta in self.stuck_phase.items():
            coeff[col - 1, row - 1] = np.exp(1j * beta)
        coeff.flags.writeable = False
        return coeff


@dataclass(frozen=True)
class PhaseAssignment:
    """Commanded phase per element for one probing slot."""

    phases: np.ndarray  # (n_h, n_v) float

    def __post_init__(self):
        phases = np.array(self.phases, dtype=float)
        if not np.all(np.isfinite(phases)):
            raise ValueError("phase assignment contains non-finite values")
        phases.flags.writeable = False
        object.__setattr__(self, "phases", phases)

    @classmethod
    def uniform(cls, dims: GridDims, phase: float) -> "PhaseAssignment":
        return cls(np.full((dims.n_h, dims.n_v), phase, dtype=float))

    @classmethod
    def split_columns(
        cls, dims: GridDims, columns, phase_in: float, phase_out: float
    ) -> "PhaseAssignment":
        """phase_in on the listed columns (all rows), phase_out elsewhere."""
        phases = np.full((dims.n_h, dims.n_v), phase_out, dtype=float)
        for col in columns:
            phases[col - 1, :] = phase_in
        return cls(phases)

    @classmethod
    def split_rows(
        cls, dims: GridDims, rows, phase_in: float, phase_out: float
    ) -> "PhaseAssignment":
        phases = np.full((dims.n_h, dims.n_v), phase_out, dtype=float)
        for row in rows:
            phases[:, row - 1] = phase_in
        return cls(phases)

    @classmethod
    def split_at_cut(
        cls,
        dims: GridDims,
        cut: float,
        orientation: str,
        phase_low: float,
        phase_high: float,
    ) -> "PhaseAssignment":
        """phase_low on indices below the cut, phase_high above it.

        The cut must fall strictly between two integer indices.
        """
        if float(cut).is_integer():
            raise ValueError(f"cut {cut} sits on an element index")
        if orientation == "horizontal":
            low = [c for c in range(1, dims.n_h + 1) if c < cut]
            return cls.split_columns(dims, low, phase_low, phase_high)
        if orientation == "vertical":
            low = [r for r in range(1, dims.n_v + 1) if r < cut]
            return cls.split_rows(dims, low, phase_low, phase_high)
        raise ValueError(f"unknown orientation {orientation!r}")


def realized_coefficients(scene: FailureScene, assign: PhaseAssignment) -> np.ndarray:
    """(n_h, n_v) complex reflecting coefficients actually applied.

    Normal elements follow the commanded phase; stuck elements ignore it.
    """
    if assign.phases.shape != (scene.dims.n_h, scene.dims.n_v):
        raise ValueError(
            f"assignment shape {assign.phases.shape} does not match grid "
            f"{(scene.dims.n_h, scene.dims.n_v)}"
        )
    theta = np.exp(1j * assign.phases)
    return np.where(scene.stuck_mask, scene.stuck_coefficients, theta)


def realized_coefficient(
    scene: FailureScene, assign: PhaseAssignment, element: tuple[int, int]
) -> complex:
    """Reflecting coefficient of one element under the given assignment."""
    if not scene.dims.contains(element):
        raise IndexError(f"element {element} outside grid")
    col, row = element
    beta = scene.stuck_phase.get(element)
    if beta is not None:
        return complex(np.exp(1j * beta))
    return complex(np.exp(1j * assign.phases[col - 1, row - 1]))


def defective_set(scene: FailureScene) -> frozenset[tuple[int, int]]:
    """Indices of all stuck elements."""
    return frozenset(scene.stuck_phase)


def normal_set(scene: FailureScene) -> frozenset[tuple[int, int]]:
    """Complement of the stuck set on the grid."""
    return frozenset(scene.dims.elements()) - defective_set(scene)

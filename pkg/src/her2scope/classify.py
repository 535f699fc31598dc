"""Five-way staining classification of detected nuclei.

Assignment is first-match-wins down the priority order: intense-complete,
intense-incomplete, weak-complete, weak-incomplete, no-staining. Membership
tests run at the membrane bundle's working resolution; nucleus coordinates
are full-resolution and mapped by the pixel-size ratio.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .detect import NucleusSet
from .errors import CoordinateError
from .membrane import MembraneMaskBundle


class CellClass(str, Enum):
    """Staining categories in priority order."""

    INTENSE_COMPLETE = "intense_complete"
    INTENSE_INCOMPLETE = "intense_incomplete"
    WEAK_COMPLETE = "weak_complete"
    WEAK_INCOMPLETE = "weak_incomplete"
    NO_STAINING = "no_staining"


CLASS_ORDER: tuple[CellClass, ...] = (
    CellClass.INTENSE_COMPLETE,
    CellClass.INTENSE_INCOMPLETE,
    CellClass.WEAK_COMPLETE,
    CellClass.WEAK_INCOMPLETE,
    CellClass.NO_STAINING,
)


@dataclass(frozen=True)
class ClassifiedCells:
    """Exactly one class per detected nucleus (full-resolution coordinates)."""

    assignments: dict[tuple[int, int], CellClass]

    def __len__(self) -> int:
        return len(self.assignments)


@dataclass(frozen=True)
class CellClassCounts:
    intense_complete: int = 0
    intense_incomplete: int = 0
    weak_complete: int = 0
    weak_incomplete: int = 0
    no_staining: int = 0

    @property
    def total(self) -> int:
        return (
            self.intense_complete
            + self.intense_incomplete
            + self.weak_complete
            + self.weak_incomplete
            + self.no_staining
        )

    def get(self, cls: CellClass) -> int:
        return getattr(self, cls.value)

    def as_dict(self) -> dict[str, int]:
        return {c.value: self.get(c) for c in CLASS_ORDER}

    def __add__(self, other: "CellClassCounts") -> "CellClassCounts":
        return CellClassCounts(**{c.value: self.get(c) + other.get(c) for c in CLASS_ORDER})

    @classmethod
    def from_dict(cls, d: dict[str, int]) -> "CellClassCounts":
        return cls(**{c.value: int(d.get(c.value, 0)) for c in CLASS_ORDER})


def map_to_working(
    nuclei: NucleusSet, bundle: MembraneMaskBundle
) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Pairs of (full-resolution point, working-resolution point).

    Mapped coordinates up to one pixel past the frame are clamped (rounding
    at the image edge); anything further out raises CoordinateError.
    """
    scale = nuclei.pixel_size / bundle.pixel_size
    h, w = bundle.m_weak.bits.shape
    out = []
    for x, y in nuclei.points:
        wx = int(np.rint(x * scale))
        wy = int(np.rint(y * scale))
        if wx < -1 or wx > w or wy < -1 or wy > h:
            raise CoordinateError(f"nucleus ({x}, {y}) maps outside the working frame")
        wx = min(max(wx, 0), w - 1)
        wy = min(max(wy, 0), h - 1)
        out.append(((int(x), int(y)), (wx, wy)))
    return out


def classify_cells(
    nuclei: NucleusSet, bundle: MembraneMaskBundle, literal_item4: bool = False
) -> ClassifiedCells:
    """Assign each nucleus the first matching class in priority order.

    ``literal_item4`` reproduces the degenerate reading in which the
    weak-incomplete rule tests the enclosed weak mask (already consumed by
    the weak-complete rule) instead of the dilated weak mask; it exists only
    for comparison and makes the weak-incomplete class empty by construction.
    """
    mie = bundle.m_intense_enclosed.bits
    ei = bundle.e_intense.bits
    mwe = bundle.m_weak_enclosed.bits
    ew = bundle.m_weak_enclosed.bits if literal_item4 else bundle.e_weak.bits

    assignments: dict[tuple[int, int], CellClass] = {}
    for full, (wx, wy) in map_to_working(nuclei, bundle):
        if mie[wy, wx]:
            cls = CellClass.INTENSE_COMPLETE
        elif ei[wy, wx]:
            cls = CellClass.INTENSE_INCOMPLETE
        elif mwe[wy, wx]:
            cls = CellClass.WEAK_COMPLETE
        elif ew[wy, wx]:
            cls = CellClass.WEAK_INCOMPLETE
        else:
            cls = CellClass.NO_STAINING
        assignments[full] = cls
    return ClassifiedCells(assignments)


def counts(classified: ClassifiedCells) -> CellClassCounts:
    """Exact cardinality of each class."""
    tally = dict.fromkeys(CLASS_ORDER, 0)
    for cls in classified.assignments.values():
        tally[cls] += 1
    return CellClassCounts(**{c.value: tally[c] for c in CLASS_ORDER})

"""Deterministic synthetic FOV generator with exact per-cell ground truth.

Cells are placed on a jittered grid (integer jitter, seeded PCG64) and
rendered through the forward optical-density model, so stain unmixing of a
rendered fixture recovers the configured OD levels. Each fixture also emits
a Gaussian response heatmap centered on every tumor nucleus.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from shapely.geometry import Point, Polygon

from .classify import CellClass, CellClassCounts, CLASS_ORDER
from .errors import FixtureError
from .ops import DEFAULT_STAIN_MATRIX
from .raster import RasterImage, ScalarChannel, save_heatmap, save_image
from .scoring import Her2Score, ScoreRules, SlideCounts, BREAST_RULES, aggregate, score


@dataclass(frozen=True)
class CellTruth:
    """Ground truth for one rendered cell."""

    x: int
    y: int
    cell_class: CellClass
    in_dcis: bool = False


@dataclass(frozen=True)
class FixtureSpec:
    seed: int = 0
    size: int = 512
    pixel_size: float = 0.424
    class_counts: dict[CellClass, int] | None = None
    od_weak: float = 0.30
    od_intense: float = 0.70
    od_nucleus: float = 0.60
    cell_radius_um: float = 4.5
    nucleus_radius_um: float = 3.0
    ring_thickness_um: float = 2.5
    arc_gap_fraction: float = 0.30
    background_amplitude: float = 0.0
    distractor_count: int = 0
    dcis_region: tuple[tuple[float, float], ...] | None = None
    dab_wash: tuple[tuple[int, int, int, int], float] | None = None  # (x0, y0, x1, y1), OD
    grid_margin_um: float = 6.0
    heatmap_sigma_px: float = 3.0

    def __post_init__(self):
        if not self.od_weak < self.od_intense:
            raise FixtureError("od_weak must be below od_intense")
        if not 0 < self.arc_gap_fraction < 1:
            raise FixtureError("arc_gap_fraction must be in (0, 1)")
        if self.size < 32:
            raise FixtureError("fixture size must be at least 32 px")

    def total_cells(self) -> int:
        return sum((self.class_counts or {}).values())


@dataclass(frozen=True)
class FovFixture:
    image: RasterImage
    truth: list[CellTruth]
    heatmap: ScalarChannel
    spec: FixtureSpec

    def truth_counts(self) -> CellClassCounts:
        tally = dict.fromkeys(CLASS_ORDER, 0)
        for c in self.truth:
            tally[c.cell_class] += 1
        return CellClassCounts(**{c.value: tally[c] for c in CLASS_ORDER})


def _soft_profile(dist: np.ndarray, radius: float, edge: float) -> np.ndarray:
    return np.clip((radius - dist) / edge, 0.0, 1.0)


def _place_cells(spec: FixtureSpec, rng: np.random.Generator, n_extra: int) -> list[tuple[int, int]]:
    """Jittered-grid positions for n cells plus n_extra distractors."""
    n_cells = spec.total_cells()
    spacing = int(math.ceil((2 * spec.cell_radius_um + spec.grid_margin_um) / spec.pixel_size))
    margin = int(math.ceil((spec.cell_radius_um + spec.grid_margin_um / 2) / spec.pixel_size)) + 1
    slots = []
    pos = margin
    while pos < spec.size - margin:
        slots.append(pos)
        pos += spacing
    capacity = len(slots) ** 2
    needed = n_cells + n_extra
    if needed > capacity:
        raise FixtureError(
            f"spec wants {needed} cells but the {spec.size}px grid only fits {capacity} "
            f"at spacing {spacing}px: {spec}"
        )
    order = rng.permutation(capacity)[:needed]
    jitter_max = max(1, spacing // 8)
    out = []
    for idx in order:
        gy, gx = divmod(int(idx), len(slots))
        jx = int(rng.integers(-jitter_max, jitter_max + 1))
        jy = int(rng.integers(-jitter_max, jitter_max + 1))
        out.append((slots[gx] + jx, slots[gy] + jy))
    return out


_STAINED = {
    CellClass.INTENSE_COMPLETE: ("intense", True),
    CellClass.INTENSE_INCOMPLETE: ("intense", False),
    CellClass.WEAK_COMPLETE: ("weak", True),
    CellClass.WEAK_INCOMPLETE: ("weak", False),
    CellClass.NO_STAINING: (None, True),
}


def generate_fov(spec: FixtureSpec) -> FovFixture:
    """Render one FOV; same seed yields identical output bytes."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    ps = spec.pixel_size
    size = spec.size
    od_h = np.zeros((size, size))
    od_dab = np.zeros((size, size))

    counts_map = spec.class_counts or {}
    positions = _place_cells(spec, rng, spec.distractor_count)
    classes: list[CellClass] = []
    for cls in CLASS_ORDER:
        classes.extend([cls] * counts_map.get(cls, 0))
    cell_positions = positions[: len(classes)]
    distractor_positions = positions[len(classes) :]

    edge_px = 1.5
    r_cell = spec.cell_radius_um / ps
    r_nuc = spec.nucleus_radius_um / ps
    half_th = spec.ring_thickness_um / (2 * ps)
    truth: list[CellTruth] = []
    dcis_poly = Polygon(spec.dcis_region) if spec.dcis_region else None

    for (cx, cy), cls in zip(cell_positions, classes):
        stain, complete = _STAINED[cls]
        win = int(math.ceil(r_cell + half_th + edge_px)) + 2
        y0, y1 = max(0, cy - win), min(size, cy + win + 1)
        x0, x1 = max(0, cx - win), min(size, cx + win + 1)
        yy, xx = np.mgrid[y0:y1, x0:x1]
        dist = np.hypot(yy - cy, xx - cx)
        od_h[y0:y1, x0:x1] += spec.od_nucleus * _soft_profile(dist, r_nuc, edge_px)
        if stain is not None:
            level = spec.od_intense if stain == "intense" else spec.od_weak
            band = np.clip((half_th - np.abs(dist - r_cell)) / edge_px, 0.0, 1.0)
            band = np.minimum(band, 1.0)
            if not complete:
                theta0 = float(rng.integers(0, 360)) * math.pi / 180.0
                ang = np.arctan2(yy - cy, xx - cx)
                gap_half = math.pi * spec.arc_gap_fraction
                diff = np.abs(np.angle(np.exp(1j * (ang - theta0))))
                band = np.where(diff < gap_half, 0.0, band)
            od_dab[y0:y1, x0:x1] = np.maximum(od_dab[y0:y1, x0:x1], level * band)
        in_dcis = bool(dcis_poly is not None and dcis_poly.covers(Point(cx, cy)))
        truth.append(CellTruth(x=cx, y=cy, cell_class=cls, in_dcis=in_dcis))

    # small hematoxylin distractors that the area filter must reject
    r_small = 1.2 / ps
    for cx, cy in distractor_positions:
        win = int(math.ceil(r_small + edge_px)) + 2
        y0, y1 = max(0, cy - win), min(size, cy + win + 1)
        x0, x1 = max(0, cx - win), min(size, cx + win + 1)
        yy, xx = np.mgrid[y0:y1, x0:x1]
        dist = np.hypot(yy - cy, xx - cx)
        od_h[y0:y1, x0:x1] += spec.od_nucleus * _soft_profile(dist, r_small, edge_px)

    if spec.dab_wash is not None:
        (wx0, wy0, wx1, wy1), wash_od = spec.dab_wash
        wash = np.zeros_like(od_dab)
        wash[wy0:wy1, wx0:wx1] = wash_od
        # nuclei inside the wash show up as DAB dips
        for t in truth:
            if wx0 <= t.x < wx1 and wy0 <= t.y < wy1:
                win = int(math.ceil(r_nuc + edge_px)) + 2
                y0, y1 = max(0, t.y - win), min(size, t.y + win + 1)
                x0, x1 = max(0, t.x - win), min(size, t.x + win + 1)
                yy, xx = np.mgrid[y0:y1, x0:x1]
                dip = _soft_profile(np.hypot(yy - t.y, xx - t.x), r_nuc, edge_px)
                wash[y0:y1, x0:x1] -= (wash_od - 0.12) * dip
        od_dab = np.maximum(od_dab, wash)

    if spec.background_amplitude > 0:
        od_h += rng.normal(0.0, spec.background_amplitude, od_h.shape)
        od_dab += rng.normal(0.0, spec.background_amplitude, od_dab.shape)
    np.clip(od_h, 0.0, None, out=od_h)
    np.clip(od_dab, 0.0, None, out=od_dab)

    od_rgb = od_h[..., None] * DEFAULT_STAIN_MATRIX[0] + od_dab[..., None] * DEFAULT_STAIN_MATRIX[2]
    rgb = np.clip(np.rint(255.0 * np.power(10.0, -od_rgb)), 0, 255).astype(np.uint8)
    image = RasterImage(rgb, ps)

    heat = np.zeros((size, size))
    sig = spec.heatmap_sigma_px
    win = int(math.ceil(4 * sig))
    for t in truth:
        y0, y1 = max(0, t.y - win), min(size, t.y + win + 1)
        x0, x1 = max(0, t.x - win), min(size, t.x + win + 1)
        yy, xx = np.mgrid[y0:y1, x0:x1]
        g = np.exp(-((yy - t.y) ** 2 + (xx - t.x) ** 2) / (2 * sig * sig))
        heat[y0:y1, x0:x1] = np.maximum(heat[y0:y1, x0:x1], g)
    heatmap = ScalarChannel(heat, ps)

    return FovFixture(image=image, truth=truth, heatmap=heatmap, spec=spec)


@dataclass(frozen=True)
class SlideFixture:
    fovs: list[FovFixture]
    expected_score: Her2Score
    truth_counts: CellClassCounts


def generate_slide(
    specs: list[FixtureSpec],
    rules: ScoreRules = BREAST_RULES,
    allow_boundary: bool = False,
    boundary_margin: float = 0.01,
) -> SlideFixture:
    """FOV set plus the score its ground truth implies.

    A class mix whose proportions sit within ``boundary_margin`` of a rule
    threshold is rejected unless ``allow_boundary`` is set, so the expected
    score cannot flip on a single misclassified cell.
    """
    fovs = [generate_fov(s) for s in specs]
    fov_counts = {f"fov{i}": f.truth_counts() for i, f in enumerate(fovs)}
    slide = aggregate(fov_counts)
    if not allow_boundary:
        for row in rules.rows:
            p = sum(slide.proportion(c) for c in row.classes)
            if abs(p - row.min_proportion) < boundary_margin:
                raise FixtureError(
                    f"class mix sits on the {row.rule_id} boundary ({p:.4f}); "
                    "pass allow_boundary=True if intentional"
                )
    expected = score(slide, rules)
    return SlideFixture(fovs=fovs, expected_score=expected, truth_counts=slide.counts)


def write_fixture(fixture: FovFixture, out_dir: str | Path, name: str) -> dict:
    """Write image PNG, heatmap sidecar and manifest entry; returns the entry."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_image(fixture.image, out / f"{name}.png")
    save_heatmap(fixture.heatmap, out / f"{name}.hmp")
    entry = {
        "name": name,
        "image": f"{name}.png",
        "heatmap": f"{name}.hmp",
        "pixel_size": fixture.spec.pixel_size,
        "seed": fixture.spec.seed,
        "cells": [
            {"x": t.x, "y": t.y, "class": t.cell_class.value, "in_dcis": t.in_dcis}
            for t in fixture.truth
        ],
    }
    return entry


def write_fixture_set(fixtures: dict[str, FovFixture], out_dir: str | Path) -> Path:
    """Write a directory of fixtures plus a manifest.json index."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = [write_fixture(f, out, name) for name, f in sorted(fixtures.items())]
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path

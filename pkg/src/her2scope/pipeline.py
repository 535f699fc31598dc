"""Per-FOV processing shared by the batch CLI and the session service.

One call runs detection at full resolution, the membrane description at half
resolution, then classification, with wall-time recorded per stage.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from shapely.geometry import Point, Polygon
from shapely.validation import explain_validity

from .classify import CellClass, CellClassCounts, ClassifiedCells, classify_cells, counts as class_counts
from .detect import DetectorParams, HeatmapFileDetector, NucleusSet, detect_classical_with_provenance
from .errors import RoiError
from .membrane import MembraneMaskBundle, MembraneParams, run_membrane_pipeline
from .ops import _inverse_stain_matrix, unmix_stains
from .raster import RasterImage

OBJECTIVE_PIXEL_SIZES = {"20x": 0.424, "40x": 0.212}


@dataclass(frozen=True)
class StageTimings:
    """Seconds of wall time per pipeline stage."""

    detection: float
    membrane: float
    classification: float

    @property
    def total(self) -> float:
        return self.detection + self.membrane + self.classification


@dataclass
class FovComputation:
    """Everything the pipeline derives from one FOV image."""

    nuclei: NucleusSet
    provenance: dict[tuple[int, int], str]
    bundle: MembraneMaskBundle
    classified: ClassifiedCells
    counts: CellClassCounts
    timings: StageTimings


def validate_polygons(polygons: list[list[tuple[float, float]]]) -> list[Polygon]:
    """Closed, simple, positive-area polygons; anything else raises RoiError."""
    out = []
    for pts in polygons:
        if len(pts) < 3:
            raise RoiError(f"polygon needs at least 3 vertices, got {len(pts)}")
        poly = Polygon(pts)
        if not poly.is_valid:
            raise RoiError(f"invalid polygon: {explain_validity(poly)}")
        if poly.area <= 0:
            raise RoiError("polygon has zero area")
        out.append(poly)
    return out


def apply_exclusions(
    nuclei: NucleusSet,
    provenance: dict[tuple[int, int], str],
    polygons: list[Polygon],
) -> tuple[NucleusSet, dict[tuple[int, int], str]]:
    """Drop nuclei covered by any exclusion polygon."""
    if not polygons:
        return nuclei, provenance
    keep = []
    for x, y in nuclei.points:
        p = Point(int(x), int(y))
        if not any(poly.covers(p) for poly in polygons):
            keep.append((int(x), int(y)))
    pts = np.array(keep, dtype=np.int64).reshape(-1, 2)
    kept = NucleusSet(pts, nuclei.frame, nuclei.pixel_size)
    prov = {k: v for k, v in provenance.items() if k in kept.as_set()}
    return kept, prov


def apply_overrides(classified: ClassifiedCells, overrides: dict[tuple[int, int], CellClass]) -> ClassifiedCells:
    """Per-nucleus manual reclassification; unknown coordinates are ignored."""
    if not overrides:
        return classified
    merged = dict(classified.assignments)
    for pt, cls in overrides.items():
        if pt in merged:
            merged[pt] = cls
    return ClassifiedCells(merged)


def process_fov(
    image: RasterImage,
    detector_params: DetectorParams,
    membrane_params: MembraneParams,
    exclusion_polygons: list[list[tuple[float, float]]] | None = None,
    overrides: dict[tuple[int, int], CellClass] | None = None,
    heatmap_path: Path | None = None,
    literal_item4: bool = False,
    precomputed_nuclei: tuple[NucleusSet, dict[tuple[int, int], str]] | None = None,
) -> FovComputation:
    """Full pipeline for one FOV.

    ``precomputed_nuclei`` lets the session reuse detections when only
    membrane parameters changed. A heatmap sidecar path switches detection to
    peak extraction from the stored response map.
    """
    polygons = validate_polygons(exclusion_polygons or [])

    t0 = time.perf_counter()
    if precomputed_nuclei is not None:
        nuclei, provenance = precomputed_nuclei
    elif heatmap_path is not None:
        detector = HeatmapFileDetector(min_distance=detector_params.min_distance)
        nuclei = detector.detect(image, heatmap_path)
        provenance = {(int(x), int(y)): "heatmap" for x, y in nuclei.points}
    else:
        nuclei, provenance = detect_classical_with_provenance(image, detector_params)
    nuclei, provenance = apply_exclusions(nuclei, provenance, polygons)
    t1 = time.perf_counter()

    half = image.downsample2()
    (dab,) = unmix_stains(half, (2,), _inverse_stain_matrix(None)[1])
    bundle = run_membrane_pipeline(dab, membrane_params)
    t2 = time.perf_counter()

    classified = classify_cells(nuclei, bundle, literal_item4=literal_item4)
    classified = apply_overrides(classified, overrides or {})
    tallies = class_counts(classified)
    t3 = time.perf_counter()

    return FovComputation(
        nuclei=nuclei,
        provenance=provenance,
        bundle=bundle,
        classified=classified,
        counts=tallies,
        timings=StageTimings(detection=t1 - t0, membrane=t2 - t1, classification=t3 - t2),
    )

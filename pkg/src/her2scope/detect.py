"""Tumor-nucleus detection: classical image-processing path and heatmap peaks.

Both paths produce a NucleusSet of full-resolution (x, y) coordinates. The
classical path combines hematoxylin maxima outside DAB-stained regions with
DAB minima inside them; the heatmap path extracts peak responses from an
externally supplied response map.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigurationError
from .ops import (
    _inverse_stain_matrix,
    bilateral_filter,
    connected_components,
    local_extrema,
    threshold_mask,
    unmix_stains,
)
from .raster import BinaryMask, PointSet, RasterImage, ScalarChannel, load_heatmap


@dataclass(frozen=True)
class NucleusSet:
    """Detected tumor-nucleus coordinates at full resolution."""

    points: np.ndarray  # (N, 2) int64, columns x, y
    frame: tuple[int, int]
    pixel_size: float

    def __post_init__(self):
        ps = PointSet(self.points, self.frame)  # bounds + dedup validation
        object.__setattr__(self, "points", ps.points)
        if not self.pixel_size > 0:
            raise ConfigurationError("pixel_size must be positive")

    def __len__(self) -> int:
        return self.points.shape[0]

    def as_set(self) -> set[tuple[int, int]]:
        return {(int(x), int(y)) for x, y in self.points}

    def min_spacing(self) -> float:
        """Smallest pairwise distance in pixels (inf for < 2 points)."""
        if len(self) < 2:
            return math.inf
        tree = cKDTree(self.points.astype(np.float64))
        d, _ = tree.query(self.points.astype(np.float64), k=2)
        return float(d[:, 1].min())


@dataclass(frozen=True)
class DetectorParams:
    """Classical-path tuning knobs. Sigmas are in pixels, thresholds in OD
    units; min_distance (the minimum nucleus separation) and
    min_nucleus_area are physical (micrometers / square micrometers) so they
    transfer across objectives."""

    h_spatial_sigma: float = 0.65
    h_range_sigma: float = 0.2
    dab_spatial_sigma: float = 0.65
    dab_range_sigma: float = 0.2
    min_distance: float = 4.25
    h_maxima_threshold: float = 0.25
    dab_minima_threshold: float = 0.30
    min_nucleus_area: float = 12.0
    dab_region_threshold: float = 0.10

    def __post_init__(self):
        for name in (
            "h_spatial_sigma",
            "h_range_sigma",
            "dab_spatial_sigma",
            "dab_range_sigma",
            "h_maxima_threshold",
            "dab_minima_threshold",
            "min_nucleus_area",
            "dab_region_threshold",
            "min_distance",
        ):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")


@dataclass(frozen=True)
class DetectionMetrics:
    """Greedy one-to-one matching quality at a micron radius."""

    recall: float
    precision: float
    f1: float
    match_radius: float
    true_positives: int
    truth_empty: bool = False
    detected_empty: bool = False


_AREA_WINDOW_UM = 5.0  # half-size of the local segmentation window


def _local_blob_area(values: np.ndarray, x: int, y: int, pixel_size: float) -> float:
    """Area (um^2) of the half-peak blob containing (x, y) in a local window."""
    r = max(2, int(math.ceil(_AREA_WINDOW_UM / pixel_size)))
    h, w = values.shape
    y0, y1 = max(0, y - r), min(h, y + r + 1)
    x0, x1 = max(0, x - r), min(w, x + r + 1)
    window = values[y0:y1, x0:x1]
    peak = values[y, x]
    if peak <= 0:
        return 0.0
    blob = BinaryMask(window >= 0.5 * peak)
    regions = connected_components(blob, connectivity=8)
    label = regions.labels[y - y0, x - x0]
    if label == 0:
        return 0.0
    return regions.area_of(int(label)) * pixel_size * pixel_size


def detect_classical_with_provenance(
    image: RasterImage, params: DetectorParams
) -> tuple[NucleusSet, dict[tuple[int, int], str]]:
    """Classical detection, also reporting which channel produced each point.

    Provenance values are "h" (hematoxylin maxima outside the DAB region)
    and "dab" (DAB minima inside it).
    """
    m_inv = _inverse_stain_matrix(None)[1]

    def _filtered(stain_index: int, spatial_sigma: float, range_sigma: float) -> ScalarChannel:
        (raw,) = unmix_stains(image, (stain_index,), m_inv)
        return bilateral_filter(raw, spatial_sigma, range_sigma)

    # The two stain chains are independent; numpy/scipy release the GIL, so
    # threads scale on multi-core hosts and cost nothing on a single core.
    with ThreadPoolExecutor(max_workers=2) as pool:
        f_h = pool.submit(_filtered, 0, params.h_spatial_sigma, params.h_range_sigma)
        idab = _filtered(2, params.dab_spatial_sigma, params.dab_range_sigma)
        ih = f_h.result()

    md_px = max(1.0, params.min_distance / image.pixel_size)
    dab_mask = threshold_mask(idab, params.dab_region_threshold)
    dab_region = dab_mask.bits
    with ThreadPoolExecutor(max_workers=2) as pool:
        f_max = pool.submit(
            local_extrema, ih, "maxima", md_px, params.h_maxima_threshold, BinaryMask(~dab_region)
        )
        d_cand = local_extrema(
            idab, "minima", md_px, params.dab_minima_threshold, within=dab_mask
        )
        h_cand = f_max.result()

    # Small-area hematoxylin blobs are stromal/immune nuclei, not tumor.
    h_pts = [
        (int(x), int(y))
        for x, y in h_cand.points
        if _local_blob_area(ih.values, int(x), int(y), image.pixel_size) >= params.min_nucleus_area
    ]
    d_pts = [(int(x), int(y)) for x, y in d_cand.points]

    d_final = [(x, y) for x, y in d_pts if dab_region[y, x]]
    h_final = [(x, y) for x, y in h_pts if not dab_region[y, x]]

    # Merge, keeping the min_distance spacing across the two sources; DAB-path
    # points win boundary conflicts (they are the tumor-specific channel).
    kept: list[tuple[int, int]] = []
    provenance: dict[tuple[int, int], str] = {}
    md2 = md_px * md_px
    for source, pts in (("dab", d_final), ("h", h_final)):
        for x, y in pts:
            ok = True
            for kx, ky in kept:
                if (kx - x) ** 2 + (ky - y) ** 2 < md2:
                    ok = False
                    break
            if ok:
                kept.append((x, y))
                provenance[(x, y)] = source

    pts_arr = np.array(kept, dtype=np.int64).reshape(-1, 2)
    nuclei = NucleusSet(pts_arr, (image.width, image.height), image.pixel_size)
    return nuclei, provenance


def detect_classical(image: RasterImage, params: DetectorParams) -> NucleusSet:
    """Full classical flow: unmix, filter, find extrema, area-filter, merge."""
    nuclei, _ = detect_classical_with_provenance(image, params)
    return nuclei


def peaks_from_heatmap(heatmap: ScalarChannel, peak_threshold: float, min_distance: float) -> NucleusSet:
    """Local maxima of a response map above peak_threshold.

    ``min_distance`` is in micrometers, converted via the heatmap pixel size.
    """
    md_px = max(1.0, min_distance / heatmap.pixel_size)
    peaks = local_extrema(heatmap, "maxima", md_px, peak_threshold)
    return NucleusSet(peaks.points, peaks.frame, heatmap.pixel_size)


def match_detections(detected: NucleusSet, truth: NucleusSet, radius: float = 5.0) -> DetectionMetrics:
    """Greedy one-to-one matching in ascending distance order.

    Pairs closer than ``radius`` micrometers are true positives. Empty truth
    (or empty detections) leaves recall (or precision) undefined; it is
    reported as 1.0 with the corresponding flag set.
    """
    if not math.isclose(detected.pixel_size, truth.pixel_size, rel_tol=1e-9):
        raise ConfigurationError("detected and truth sets must share pixel_size")
    radius_px = radius / detected.pixel_size

    pairs: list[tuple[float, int, int]] = []
    if len(detected) and len(truth):
        tree = cKDTree(truth.points.astype(np.float64))
        for di, p in enumerate(detected.points.astype(np.float64)):
            for ti in tree.query_ball_point(p, radius_px):
                d = float(np.hypot(*(p - truth.points[ti])))
                if d < radius_px:
                    pairs.append((d, di, ti))
    pairs.sort()
    used_d: set[int] = set()
    used_t: set[int] = set()
    tp = 0
    for _, di, ti in pairs:
        if di in used_d or ti in used_t:
            continue
        used_d.add(di)
        used_t.add(ti)
        tp += 1

    truth_empty = len(truth) == 0
    detected_empty = len(detected) == 0
    recall = 1.0 if truth_empty else tp / len(truth)
    precision = 1.0 if detected_empty else tp / len(detected)
    f1 = 2 * recall * precision / (recall + precision) if recall > 0 and precision > 0 else 0.0
    return DetectionMetrics(
        recall=recall,
        precision=precision,
        f1=f1,
        match_radius=radius,
        true_positives=tp,
        truth_empty=truth_empty,
        detected_empty=detected_empty,
    )


class NucleusDetector(Protocol):
    """Common interface over the classical and heatmap-file detectors."""

    def detect(self, image: RasterImage, heatmap_path: Path | None = None) -> NucleusSet: ...


@dataclass(frozen=True)
class ClassicalDetector:
    params: DetectorParams = field(default_factory=DetectorParams)

    def detect(self, image: RasterImage, heatmap_path: Path | None = None) -> NucleusSet:
        return detect_classical(image, self.params)


@dataclass(frozen=True)
class HeatmapFileDetector:
    """Reads a sidecar response map (16-bit PNG or .hmp binary grid).

    ``min_distance`` is in micrometers, matching DetectorParams.
    """

    peak_threshold: float = 0.3
    min_distance: float = 4.25

    def detect(self, image: RasterImage, heatmap_path: Path | None = None) -> NucleusSet:
        if heatmap_path is None:
            raise ConfigurationError("heatmap detector requires a sidecar path")
        heatmap = load_heatmap(heatmap_path, image.pixel_size)
        if (heatmap.width, heatmap.height) != (image.width, image.height):
            raise ConfigurationError("heatmap dimensions do not match the image")
        return peaks_from_heatmap(heatmap, self.peak_threshold, self.min_distance)

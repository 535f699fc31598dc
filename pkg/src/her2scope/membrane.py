"""Membrane description: segmentation, skeleton contours, completeness labels
and the four point sets driving cell classification.

Runs at the working (half) resolution of the FOV. Masks are kept as boolean
grids; point-set views are derived on demand.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError
from .ops import connected_components, dilate, fill_enclosed, skeletonize, threshold_mask
from .raster import BinaryMask, PointSet, ScalarChannel, save_mask_png


@dataclass(frozen=True)
class MembraneParams:
    """Thresholds in OD units; dilation radius d in micrometers.

    ``enhancement`` is an optional (lo, hi) percentile pair for contrast
    stretching the DAB channel before thresholding; None applies the
    thresholds to raw optical densities.
    """

    t_weak: float = 0.15
    t_intense: float = 0.45
    d: float = 5.0
    enhancement: tuple[float, float] | None = None

    def __post_init__(self):
        if not 0 < self.t_weak < self.t_intense:
            raise ConfigurationError(
                f"need 0 < t_weak < t_intense, got {self.t_weak}, {self.t_intense}"
            )
        if self.d < 0:
            raise ConfigurationError("dilation radius d must be >= 0")
        if self.enhancement is not None:
            lo, hi = self.enhancement
            if not (0 <= lo < hi <= 100):
                raise ConfigurationError(f"enhancement percentiles need 0 <= lo < hi <= 100, got {lo}, {hi}")


@dataclass(frozen=True)
class ContourLabel:
    """One 8-connected skeleton component with its completeness flag."""

    component_id: int
    complete: bool
    polyline: list[tuple[int, int]]  # ordered (x, y) chain, subset of the component


@dataclass(frozen=True)
class MembraneMaskBundle:
    """All masks and point sets extracted from one FOV's DAB channel."""

    m_weak: BinaryMask
    m_intense: BinaryMask
    c_weak: BinaryMask
    c_intense: BinaryMask
    m_weak_enclosed: BinaryMask
    m_intense_enclosed: BinaryMask
    e_weak: BinaryMask
    e_intense: BinaryMask
    contour_labels: list[ContourLabel]
    pixel_size: float

    @property
    def p_weak_enclosed(self) -> PointSet:
        return self.m_weak_enclosed.point_set()

    @property
    def p_intense_enclosed(self) -> PointSet:
        return self.m_intense_enclosed.point_set()

    @property
    def p_weak(self) -> PointSet:
        return self.e_weak.point_set()

    @property
    def p_intense(self) -> PointSet:
        return self.e_intense.point_set()


def enhance_dab(dab: ScalarChannel, lo: float, hi: float) -> tuple[ScalarChannel, bool]:
    """Percentile contrast stretch onto [0, 1], clamped.

    Returns the enhanced channel and a degeneracy flag; a constant channel is
    returned unchanged with the flag set.
    """
    if not lo < hi:
        raise ConfigurationError("enhancement needs lo < hi")
    v = dab.values
    lo_val, hi_val = np.percentile(v, [lo, hi])
    if hi_val - lo_val <= 1e-12:
        return dab, True
    out = np.clip((v - lo_val) / (hi_val - lo_val), 0.0, 1.0)
    return ScalarChannel(out, dab.pixel_size), False


def segment_membranes(dab_enhanced: ScalarChannel, params: MembraneParams) -> tuple[BinaryMask, BinaryMask]:
    """Weak and intense staining masks; the weak mask contains the intense one."""
    m_weak = threshold_mask(dab_enhanced, params.t_weak)
    m_intense = threshold_mask(dab_enhanced, params.t_intense)
    return m_weak, m_intense


def _trace_polyline(comp: np.ndarray, y0: int, x0: int) -> list[tuple[int, int]]:
    """Greedy 8-neighbor walk covering the component from an endpoint-ish start."""
    ys, xs = np.nonzero(comp)
    pixels = set(zip(ys.tolist(), xs.tolist()))
    # prefer a degree-1 pixel (open arc endpoint), else the lowest (y, x)
    start = None
    for y, x in sorted(pixels):
        deg = sum(
            1
            for dy in (-1, 0, 1)
            for dx in (-1, 0, 1)
            if (dy or dx) and (y + dy, x + dx) in pixels
        )
        if deg == 1:
            start = (y, x)
            break
    if start is None:
        start = min(pixels)
    chain = [start]
    visited = {start}
    cur = start
    neigh_order = ((0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1))
    while True:
        y, x = cur
        nxt = None
        for dy, dx in neigh_order:
            cand = (y + dy, x + dx)
            if cand in pixels and cand not in visited:
                nxt = cand
                break
        if nxt is None:
            break
        chain.append(nxt)
        visited.add(nxt)
        cur = nxt
    return [(int(x) + x0, int(y) + y0) for y, x in chain]


def _component_interior(comp: np.ndarray) -> np.ndarray:
    """Interior pixels enclosed by this component alone (border = open)."""
    padded = np.pad(comp, 1)
    filled = fill_enclosed(BinaryMask(padded)).bits
    return (filled & ~padded)[1:-1, 1:-1]


def extract_contours(
    m_weak: BinaryMask, m_intense: BinaryMask
) -> tuple[BinaryMask, BinaryMask, list[ContourLabel]]:
    """Skeletonize the weak mask and label each component's completeness.

    The intense skeleton is the intersection of the weak skeleton with the
    intense mask (no second skeletonization). A component is complete when it
    encloses interior background and is innermost: no other skeleton pixel
    lies strictly inside that interior. Regions truncated by the image border
    are never complete.
    """
    if not m_intense.issubset(m_weak):
        raise ConfigurationError("m_intense must be a subset of m_weak")
    c_weak = skeletonize(m_weak)
    c_intense = BinaryMask(c_weak.bits & m_intense.bits)

    regions = connected_components(c_weak, connectivity=8)
    labels = regions.labels
    objects_slices = _bounding_slices(labels, regions.count)
    contour_labels: list[ContourLabel] = []
    for cid in range(1, regions.count + 1):
        sl = objects_slices[cid - 1]
        sub_labels = labels[sl]
        comp = sub_labels == cid
        interior = _component_interior(comp)
        complete = False
        if interior.any():
            # border-truncated arcs never enclose an interior: the padded fill
            # in _component_interior treats everything beyond the crop as open
            others_inside = bool(np.any(interior & (sub_labels != 0) & ~comp))
            complete = not others_inside
        yy, xx = np.nonzero(comp)
        polyline = _trace_polyline(comp, sl[0].start, sl[1].start) if yy.size else []
        contour_labels.append(ContourLabel(component_id=cid, complete=complete, polyline=polyline))
    return c_weak, c_intense, contour_labels


def _bounding_slices(labels: np.ndarray, count: int) -> list[tuple[slice, slice]]:
    slices = ndimage.find_objects(labels, max_label=count)
    return [s if s is not None else (slice(0, 0), slice(0, 0)) for s in slices]


def build_masks(
    c_weak: BinaryMask,
    c_intense: BinaryMask,
    m_weak: BinaryMask,
    m_intense: BinaryMask,
    params: MembraneParams,
    pixel_size: float,
    contour_labels: list[ContourLabel] | None = None,
) -> MembraneMaskBundle:
    """Fill enclosed skeletons and dilate the staining masks by d micrometers."""
    d_px = round(params.d / pixel_size)
    # Four independent mask products; threads scale on multi-core hosts.
    with ThreadPoolExecutor(max_workers=4) as pool:
        f_we = pool.submit(fill_enclosed, c_weak)
        f_ie = pool.submit(fill_enclosed, c_intense)
        f_ew = pool.submit(dilate, m_weak, d_px)
        e_intense = dilate(m_intense, d_px)
    return MembraneMaskBundle(
        m_weak=m_weak,
        m_intense=m_intense,
        c_weak=c_weak,
        c_intense=c_intense,
        m_weak_enclosed=f_we.result(),
        m_intense_enclosed=f_ie.result(),
        e_weak=f_ew.result(),
        e_intense=e_intense,
        contour_labels=contour_labels if contour_labels is not None else [],
        pixel_size=pixel_size,
    )


def run_membrane_pipeline(dab: ScalarChannel, params: MembraneParams) -> MembraneMaskBundle:
    """Full membrane description for one working-resolution DAB channel."""
    channel = dab
    if params.enhancement is not None:
        channel, _ = enhance_dab(dab, *params.enhancement)
    m_weak, m_intense = segment_membranes(channel, params)
    c_weak, c_intense, contour_labels = extract_contours(m_weak, m_intense)
    return build_masks(c_weak, c_intense, m_weak, m_intense, params, dab.pixel_size, contour_labels)


def export_bundle(bundle: MembraneMaskBundle, out_dir: str | Path) -> None:
    """Write debug PNGs for every mask plus the contour-label JSON sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("m_weak", "m_intense", "c_weak", "c_intense", "m_weak_enclosed", "m_intense_enclosed", "e_weak", "e_intense"):
        save_mask_png(getattr(bundle, name), out / f"{name}.png")
    contours = [
        {"component_id": c.component_id, "complete": c.complete, "polyline": [[x, y] for x, y in c.polyline]}
        for c in bundle.contour_labels
    ]
    (out / "contours.json").write_text(json.dumps(contours, sort_keys=True))

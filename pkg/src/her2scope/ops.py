"""Raster-core operations: stain unmixing, filtering, morphology, extrema.

The bilateral filter and skeleton thinning dispatch to the selected kernel
backend (compiled extension or numpy fallback); everything else is numpy /
scipy.ndimage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import ndimage, signal
from scipy.spatial import cKDTree

from . import kernels
from .errors import ConfigurationError
from .raster import BinaryMask, PointSet, RasterImage, ScalarChannel, StainChannels

# Ruifrok & Johnston H-DAB unmixing vectors (rows: H, E, DAB in RGB OD space),
# normalized to unit length. Overridable wherever a stain matrix is accepted.
DEFAULT_STAIN_MATRIX = np.array(
    [
        [0.65, 0.70, 0.29],
        [0.07, 0.99, 0.11],
        [0.27, 0.57, 0.78],
    ]
)
DEFAULT_STAIN_MATRIX /= np.linalg.norm(DEFAULT_STAIN_MATRIX, axis=1, keepdims=True)

_OD_FLOOR = 1.0 / 255.0  # intensity floor avoiding log(0)

_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)


def _inverse_stain_matrix(stain_matrix: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    m = DEFAULT_STAIN_MATRIX if stain_matrix is None else np.asarray(stain_matrix, dtype=np.float64)
    if m.shape != (3, 3):
        raise ConfigurationError(f"stain matrix must be 3x3, got {m.shape}")
    if abs(np.linalg.det(m)) < 1e-10:
        raise ConfigurationError("stain matrix is singular")
    return m, np.linalg.inv(m)


def rgb_to_hed(image: RasterImage, stain_matrix: np.ndarray | None = None) -> StainChannels:
    """Unmix an RGB image into hematoxylin / eosin / DAB optical densities.

    Per-channel OD is -log10(max(v/255, 1/255)); concentrations below zero
    are clamped to zero.
    """
    m, m_inv = _inverse_stain_matrix(stain_matrix)
    h, e, dab = unmix_stains(image, (0, 1, 2), m_inv)
    return StainChannels(h=h, e=e, dab=dab)


_OD_LUT = -np.log10(np.maximum(np.arange(256, dtype=np.float64) / 255.0, _OD_FLOOR))


def unmix_stains(
    image: RasterImage, stain_indices: tuple[int, ...], m_inv: np.ndarray
) -> list[ScalarChannel]:
    """Unmix selected stain components (0=H, 1=E, 2=DAB) via 256-entry tables.

    stain_j = sum_c od(v_c) * m_inv[c, j], clamped to >= 0.
    """
    pix = image.pixels
    out = []
    for j in stain_indices:
        vals = (_OD_LUT * m_inv[0, j])[pix[..., 0]]
        vals += (_OD_LUT * m_inv[1, j])[pix[..., 1]]
        vals += (_OD_LUT * m_inv[2, j])[pix[..., 2]]
        np.maximum(vals, 0.0, out=vals)
        out.append(ScalarChannel(vals, image.pixel_size))
    return out


def hed_to_rgb(stains: StainChannels, stain_matrix: np.ndarray | None = None) -> RasterImage:
    """Forward OD model: reconstruct RGB from stain concentrations."""
    m, _ = _inverse_stain_matrix(stain_matrix)
    hed = np.stack([stains.h.values, stains.e.values, stains.dab.values], axis=-1)
    od = hed @ m
    rgb = 255.0 * np.power(10.0, -od)
    return RasterImage(np.clip(np.rint(rgb), 0, 255).astype(np.uint8), stains.h.pixel_size)


def bilateral_filter(channel: ScalarChannel, spatial_sigma: float, range_sigma: float) -> ScalarChannel:
    """Edge-preserving smoothing over a window of radius ceil(3 * spatial_sigma)."""
    if not (spatial_sigma > 0 and range_sigma > 0):
        raise ConfigurationError("bilateral sigmas must be positive")
    return ScalarChannel(kernels.bilateral(channel.values, spatial_sigma, range_sigma), channel.pixel_size)


def threshold_mask(channel: ScalarChannel, t: float) -> BinaryMask:
    """Foreground where value >= t."""
    return BinaryMask(channel.values >= t)


def _disk(radius: float) -> np.ndarray:
    r = int(math.floor(radius))
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    return dy * dy + dx * dx <= radius * radius + 1e-9


def dilate(mask: BinaryMask, d: float) -> BinaryMask:
    """Grow foreground by a discrete disk of radius d pixels; d = 0 is identity."""
    if d < 0:
        raise ConfigurationError("dilation radius must be >= 0")
    if d < 1:
        return mask
    if not mask.bits.any():
        return mask
    # Dilation as thresholded convolution with the disk footprint: the count
    # of covered foreground pixels is integer-valued, so FFT rounding error
    # (orders of magnitude below 0.5) cannot flip the comparison.
    counts = signal.oaconvolve(mask.bits.astype(np.float32), _disk(d).astype(np.float32), mode="same")
    return BinaryMask(counts > 0.5)


def _simple_pixel(img: np.ndarray, y: int, x: int) -> bool:
    """Removable without changing local 8-connectivity and not an endpoint."""
    h, w = img.shape
    ring = []
    for dy, dx in ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)):
        ny, nx = y + dy, x + dx
        ring.append(int(img[ny, nx]) if 0 <= ny < h and 0 <= nx < w else 0)
    b = sum(ring)
    if b < 2:
        return False
    if b == 8:
        return True  # fully interior: removal cannot break connectivity
    a = sum(1 for i in range(8) if ring[i] == 0 and ring[(i + 1) % 8] == 1)
    return a == 1


def _cleanup_2x2(img: np.ndarray) -> np.ndarray:
    """Remove redundant pixels of any remaining 2x2 foreground block."""
    while True:
        blocks = img[:-1, :-1] & img[:-1, 1:] & img[1:, :-1] & img[1:, 1:]
        ys, xs = np.nonzero(blocks)
        if ys.size == 0:
            return img
        for y, x in zip(ys, xs):
            if not (img[y, x] and img[y, x + 1] and img[y + 1, x] and img[y + 1, x + 1]):
                continue
            corners = ((y, x), (y, x + 1), (y + 1, x), (y + 1, x + 1))
            for py, px in corners:
                if _simple_pixel(img, py, px):
                    img[py, px] = 0
                    break
            else:
                # No locally safe choice exists (dense pathological input);
                # thinness is the hard invariant, so remove a corner anyway.
                img[corners[0][0], corners[0][1]] = 0


def skeletonize(mask: BinaryMask) -> BinaryMask:
    """One-pixel-wide 8-connected skeleton (iterative two-subpass thinning).

    A post-pass removes simple pixels of residual 2x2 blocks so the result
    never contains a 2x2 all-foreground block.
    """
    thin = kernels.zhang_suen_thin(mask.bits).astype(np.uint8)
    return BinaryMask(_cleanup_2x2(thin).astype(bool))


def fill_enclosed(skeleton: BinaryMask) -> BinaryMask:
    """Skeleton pixels plus every background region not 4-connected to the border."""
    bg = ~skeleton.bits
    labels, _ = ndimage.label(bg, structure=_STRUCT_4)
    border = np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    open_labels = np.unique(border[border > 0])
    enclosed = bg & ~np.isin(labels, open_labels)
    return BinaryMask(skeleton.bits | enclosed)


@dataclass(frozen=True)
class LabeledRegions:
    """Connected-component labeling result."""

    labels: np.ndarray  # (H, W) int32, 0 = background
    count: int
    areas: np.ndarray  # (count,) pixel counts, areas[i] is label i+1

    def area_of(self, label: int) -> int:
        return int(self.areas[label - 1])


def connected_components(mask: BinaryMask, connectivity: int = 8) -> LabeledRegions:
    """Label foreground components at 4- or 8-connectivity with pixel areas."""
    if connectivity not in (4, 8):
        raise ConfigurationError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = _STRUCT_4 if connectivity == 4 else _STRUCT_8
    labels, n = ndimage.label(mask.bits, structure=structure)
    areas = np.bincount(labels.ravel(), minlength=n + 1)[1:]
    return LabeledRegions(labels.astype(np.int32), int(n), areas)


def _disk_offsets(radius: float) -> np.ndarray:
    r = int(math.floor(radius))
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    keep = dy * dy + dx * dx <= radius * radius + 1e-9
    return np.stack([dy[keep], dx[keep]], axis=1)


def local_extrema(
    channel: ScalarChannel,
    mode: Literal["maxima", "minima"],
    min_distance: float,
    abs_threshold: float,
    within: BinaryMask | None = None,
) -> PointSet:
    """Strict local extrema with non-maximum suppression.

    A pixel is a candidate when it dominates every in-bounds pixel of the
    Euclidean disk of radius min_distance and that disk is not flat; it must
    also pass abs_threshold (>= for maxima, <= for minima). A connected
    plateau of equal-valued candidates collapses to the candidate nearest its
    centroid. Surviving points are pairwise separated by >= min_distance;
    within a conflict the more extreme value wins, ties resolved toward the
    lowest (y, x).

    When ``within`` is given, only pixels inside that mask may be reported
    (the domination test still sees all neighbors, inside the mask or not).
    """
    if min_distance < 1:
        raise ConfigurationError("min_distance must be >= 1")
    if mode == "maxima":
        u = channel.values
        thr = abs_threshold
    elif mode == "minima":
        u = -channel.values
        thr = -abs_threshold
    else:
        raise ConfigurationError(f"unknown extrema mode: {mode}")

    h, w = u.shape
    # Cheap separable prefilters: domination needs u == max over the inscribed
    # square; non-flatness needs min over the circumscribed square < u for any
    # pixel whose disk lies fully in-bounds (the border handling below keeps
    # partially-out-of-bounds disks exact).
    sq_r = max(1, int(math.floor(min_distance / math.sqrt(2.0))))
    sqmax = ndimage.maximum_filter(u, size=2 * sq_r + 1, mode="nearest")
    r_pad = int(math.floor(min_distance))
    cand_mask0 = (u >= sqmax) & (u >= thr)
    if within is not None:
        if within.bits.shape != u.shape:
            raise ConfigurationError("within mask shape must match the channel")
        cand_mask0 &= within.bits
    if np.count_nonzero(cand_mask0) > 200_000:
        # Many flat-plateau candidates: prune with the circumscribed-square
        # minimum (a pixel whose whole square is flat cannot be an extremum;
        # the exact per-disk check below handles everything that survives).
        big_min = ndimage.minimum_filter(
            np.pad(u, r_pad, constant_values=np.inf), size=2 * r_pad + 1
        )[r_pad:-r_pad, r_pad:-r_pad]
        cand_mask0 &= big_min < u
    cand = np.nonzero(cand_mask0)
    cys, cxs = cand
    if cys.size == 0:
        return PointSet(np.empty((0, 2), dtype=np.int64), (w, h))

    offs = _disk_offsets(min_distance)
    pad_lo = np.pad(u, r_pad, constant_values=-np.inf)
    keep = np.zeros(cys.size, dtype=bool)
    vals_all = u[cys, cxs]
    chunk = max(1, (1 << 22) // offs.shape[0])
    for start in range(0, cys.size, chunk):
        sl = slice(start, min(start + chunk, cys.size))
        nb = pad_lo[
            cys[sl][None, :] + (offs[:, 0] + r_pad)[:, None],
            cxs[sl][None, :] + (offs[:, 1] + r_pad)[:, None],
        ]
        vals = vals_all[sl]
        dominates = np.all(nb <= vals[None, :], axis=0)
        nb_min = np.where(np.isfinite(nb), nb, np.inf).min(axis=0)
        keep[sl] = dominates & (nb_min < vals)
    cys, cxs, vals = cys[keep], cxs[keep], vals_all[keep]
    if cys.size == 0:
        return PointSet(np.empty((0, 2), dtype=np.int64), (w, h))

    # Equal-valued candidate plateaus (e.g. saturated nuclei) would otherwise
    # yield one candidate per plateau pixel; keep only the pixel nearest each
    # plateau's centroid (adjacent candidates are provably equal-valued).
    cand_mask = np.zeros(u.shape, dtype=bool)
    cand_mask[cys, cxs] = True
    plat_labels, _ = ndimage.label(cand_mask, structure=_STRUCT_8)
    groups = plat_labels[cys, cxs]
    rep_idx = []
    for gid in np.unique(groups):
        members = np.nonzero(groups == gid)[0]
        my = cys[members].mean()
        mx = cxs[members].mean()
        d2 = (cys[members] - my) ** 2 + (cxs[members] - mx) ** 2
        best = members[np.lexsort((cxs[members], cys[members], d2))[0]]
        rep_idx.append(best)
    rep_idx = np.array(rep_idx)
    cys, cxs, vals = cys[rep_idx], cxs[rep_idx], vals[rep_idx]

    order = np.lexsort((cxs, cys, -vals))
    pts = np.stack([cxs[order], cys[order]], axis=1).astype(np.float64)
    tree = cKDTree(pts)
    suppressed = np.zeros(len(pts), dtype=bool)
    kept: list[int] = []
    md2 = min_distance * min_distance
    for i in range(len(pts)):
        if suppressed[i]:
            continue
        kept.append(i)
        for j in tree.query_ball_point(pts[i], min_distance):
            if j == i or suppressed[j]:
                continue
            dx = pts[j, 0] - pts[i, 0]
            dy = pts[j, 1] - pts[i, 1]
            if dx * dx + dy * dy < md2:
                suppressed[j] = True
    out = pts[kept].astype(np.int64)
    return PointSet(out, (w, h))

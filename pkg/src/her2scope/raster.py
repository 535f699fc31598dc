"""Core raster types: RGB images, scalar channels, binary masks and point sets.

All pixel grids are numpy arrays indexed ``[y, x]``; point coordinates are
``(x, y)`` integer pairs in the same frame.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image


class RasterError(ValueError):
    """Invalid raster construction or IO failure."""


@dataclass(frozen=True)
class RasterImage:
    """8-bit RGB image with isotropic pixel size in micrometers per pixel."""

    pixels: np.ndarray  # (H, W, 3) uint8
    pixel_size: float

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise RasterError(f"RasterImage needs a (H, W, 3) buffer, got {px.shape}")
        if not self.pixel_size > 0:
            raise RasterError(f"pixel_size must be positive, got {self.pixel_size}")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def downsample2(self) -> "RasterImage":
        """Half-resolution image via 2x2 box averaging (odd edges dropped)."""
        h2, w2 = self.height // 2, self.width // 2
        p = self.pixels[: 2 * h2, : 2 * w2].astype(np.uint16)
        avg = (p[0::2, 0::2] + p[0::2, 1::2] + p[1::2, 0::2] + p[1::2, 1::2] + 2) // 4
        return RasterImage(avg.astype(np.uint8), self.pixel_size * 2.0)


@dataclass(frozen=True)
class ScalarChannel:
    """Real-valued single-channel grid (optical density for stain channels)."""

    values: np.ndarray  # (H, W) float64
    pixel_size: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise RasterError(f"ScalarChannel needs a (H, W) buffer, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise RasterError("ScalarChannel values must all be finite")
        if not self.pixel_size > 0:
            raise RasterError(f"pixel_size must be positive, got {self.pixel_size}")
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class BinaryMask:
    """Boolean pixel grid."""

    bits: np.ndarray  # (H, W) bool

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.dtype != np.bool_:
            b = b.astype(bool)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise RasterError(f"BinaryMask needs a (H, W) buffer, got {b.shape}")
        object.__setattr__(self, "bits", b)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())

    def issubset(self, other: "BinaryMask") -> bool:
        return bool(np.all(~self.bits | other.bits))

    def point_set(self) -> "PointSet":
        ys, xs = np.nonzero(self.bits)
        pts = np.stack([xs, ys], axis=1).astype(np.int64)
        return PointSet(pts, (self.width, self.height))


@dataclass(frozen=True)
class PointSet:
    """Deduplicated integer (x, y) coordinates inside a frame."""

    points: np.ndarray  # (N, 2) int64, columns x, y
    frame: tuple[int, int]  # (width, height)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1, 2)
        w, h = self.frame
        if pts.size:
            if pts[:, 0].min() < 0 or pts[:, 0].max() >= w or pts[:, 1].min() < 0 or pts[:, 1].max() >= h:
                raise RasterError("PointSet contains out-of-frame points")
            pts = np.unique(pts, axis=0)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "frame", (int(w), int(h)))

    def __len__(self) -> int:
        return self.points.shape[0]

    def __contains__(self, xy) -> bool:
        x, y = xy
        return bool(np.any((self.points[:, 0] == x) & (self.points[:, 1] == y)))

    def as_set(self) -> set[tuple[int, int]]:
        return {(int(x), int(y)) for x, y in self.points}

    def mask(self) -> BinaryMask:
        w, h = self.frame
        bits = np.zeros((h, w), dtype=bool)
        if len(self):
            bits[self.points[:, 1], self.points[:, 0]] = True
        return BinaryMask(bits)


@dataclass(frozen=True)
class StainChannels:
    """Unmixed hematoxylin / eosin / DAB optical-density channels."""

    h: ScalarChannel
    e: ScalarChannel
    dab: ScalarChannel

    def __post_init__(self):
        shapes = {c.values.shape for c in (self.h, self.e, self.dab)}
        sizes = {c.pixel_size for c in (self.h, self.e, self.dab)}
        if len(shapes) != 1 or len(sizes) != 1:
            raise RasterError("stain channels must share dimensions and pixel_size")


# ---------------------------------------------------------------------------
# IO

_SUPPORTED = {".png", ".jpg", ".jpeg", ".tif", ".tiff"}


def load_image(path: str | Path, pixel_size: float) -> RasterImage:
    """Decode a PNG/JPEG/TIFF file into an RGB RasterImage."""
    path = Path(path)
    if path.suffix.lower() not in _SUPPORTED:
        raise RasterError(f"unsupported image format: {path.suffix}")
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except RasterError:
        raise
    except Exception as exc:
        raise RasterError(f"cannot decode {path}: {exc}") from exc
    return RasterImage(arr, pixel_size)


def save_image(image: RasterImage, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() not in _SUPPORTED:
        raise RasterError(f"unsupported image format: {path.suffix}")
    Image.fromarray(image.pixels, mode="RGB").save(path)


def save_mask_png(mask: BinaryMask, path: str | Path) -> None:
    """Write a mask as a 1-bit PNG for debugging overlays."""
    Image.fromarray(mask.bits).convert("1").save(Path(path))


def load_mask_png(path: str | Path) -> BinaryMask:
    with Image.open(Path(path)) as im:
        arr = np.asarray(im.convert("L")) > 127
    return BinaryMask(arr)


# Heatmap sidecar formats.
#
# 16-bit PNG: single channel, responses stored as value/65535 of the stated
# scale (scale defaults to 1.0, i.e. raw responses in [0, 1]).
#
# Flat binary (.hmp): little-endian throughout.
#   bytes 0-3   magic b"HMAP"
#   bytes 4-7   uint32 width
#   bytes 8-11  uint32 height
#   bytes 12-15 float32 scale (multiplier applied to stored values)
#   then width*height float32 values, row-major (y outer, x inner)

_HMAP_MAGIC = b"HMAP"


def save_heatmap(heatmap: ScalarChannel, path: str | Path, scale: float = 1.0) -> None:
    path = Path(path)
    if path.suffix.lower() == ".png":
        q = np.clip(heatmap.values / scale, 0.0, 1.0)
        Image.fromarray((q * 65535.0 + 0.5).astype(np.uint16)).save(path)
        return
    with open(path, "wb") as fh:
        fh.write(_HMAP_MAGIC)
        fh.write(struct.pack("<IIf", heatmap.width, heatmap.height, scale))
        fh.write(heatmap.values.astype("<f4").tobytes())


def load_heatmap(path: str | Path, pixel_size: float, scale: float = 1.0) -> ScalarChannel:
    path = Path(path)
    if path.suffix.lower() == ".png":
        with Image.open(path) as im:
            arr = np.asarray(im)
        if arr.ndim != 2:
            raise RasterError("heatmap PNG must be single-channel")
        values = arr.astype(np.float64) / 65535.0 * scale
        return ScalarChannel(values, pixel_size)
    raw = Path(path).read_bytes()
    if raw[:4] != _HMAP_MAGIC or len(raw) < 16:
        raise RasterError(f"{path} is not a heatmap sidecar")
    w, h, file_scale = struct.unpack("<IIf", raw[4:16])
    values = np.frombuffer(raw[16:], dtype="<f4")
    if values.size != w * h:
        raise RasterError(f"heatmap payload size mismatch: {values.size} != {w}x{h}")
    return ScalarChannel(values.reshape(h, w).astype(np.float64) * file_scale, pixel_size)

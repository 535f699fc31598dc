"""Raster type invariants and image / heatmap IO round trips."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from her2scope.raster import (
    BinaryMask,
    PointSet,
    RasterError,
    RasterImage,
    ScalarChannel,
    load_heatmap,
    load_image,
    load_mask_png,
    save_heatmap,
    save_image,
    save_mask_png,
)

rng = np.random.Generator(np.random.PCG64(3))


def test_raster_image_validation():
    with pytest.raises(RasterError):
        RasterImage(np.zeros((4, 4), dtype=np.uint8), 0.424)
    with pytest.raises(RasterError):
        RasterImage(np.zeros((4, 4, 3), dtype=np.uint8), 0.0)


def test_downsample2_box_average_oracle():
    px = rng.integers(0, 256, (6, 8, 3)).astype(np.uint8)
    img = RasterImage(px, 0.424)
    half = img.downsample2()
    assert (half.height, half.width) == (3, 4)
    assert half.pixel_size == pytest.approx(0.848)
    for y in range(3):
        for x in range(4):
            block = px[2 * y : 2 * y + 2, 2 * x : 2 * x + 2].astype(int)
            want = (block.sum(axis=(0, 1)) + 2) // 4  # rounded mean
            assert np.array_equal(half.pixels[y, x], want)


def test_downsample2_drops_odd_edge():
    img = RasterImage(rng.integers(0, 256, (7, 9, 3)).astype(np.uint8), 1.0)
    half = img.downsample2()
    assert (half.height, half.width) == (3, 4)


def test_scalar_channel_rejects_nonfinite():
    bad = np.zeros((4, 4))
    bad[1, 1] = np.nan
    with pytest.raises(RasterError):
        ScalarChannel(bad, 1.0)


def test_point_set_dedup_and_bounds():
    ps = PointSet(np.array([[1, 2], [1, 2], [0, 0]]), (4, 4))
    assert len(ps) == 2
    assert (1, 2) in ps and (3, 3) not in ps
    with pytest.raises(RasterError):
        PointSet(np.array([[4, 0]]), (4, 4))
    with pytest.raises(RasterError):
        PointSet(np.array([[-1, 0]]), (4, 4))


def test_mask_point_set_round_trip():
    bits = rng.random((10, 12)) < 0.3
    mask = BinaryMask(bits)
    assert np.array_equal(mask.point_set().mask().bits, bits)
    assert mask.count() == int(bits.sum())


def test_issubset():
    a = BinaryMask(np.array([[1, 0], [0, 0]], dtype=bool))
    b = BinaryMask(np.array([[1, 1], [0, 1]], dtype=bool))
    assert a.issubset(b) and not b.issubset(a)


@pytest.mark.parametrize("suffix", [".png", ".tif"])
def test_image_io_lossless_round_trip(tmp_path, suffix):
    img = RasterImage(rng.integers(0, 256, (16, 20, 3)).astype(np.uint8), 0.212)
    path = tmp_path / f"fov{suffix}"
    save_image(img, path)
    back = load_image(path, 0.212)
    assert np.array_equal(back.pixels, img.pixels)
    assert back.pixel_size == img.pixel_size


def test_image_io_jpeg_decodes(tmp_path):
    img = RasterImage(np.full((16, 16, 3), 200, dtype=np.uint8), 0.424)
    path = tmp_path / "fov.jpg"
    save_image(img, path)
    back = load_image(path, 0.424)
    assert (back.height, back.width) == (16, 16)


def test_image_io_rejects_unknown_format(tmp_path):
    with pytest.raises(RasterError):
        load_image(tmp_path / "fov.bmp", 1.0)


def test_image_io_rejects_garbage(tmp_path):
    path = tmp_path / "bad.png"
    path.write_bytes(b"not a png")
    with pytest.raises(RasterError):
        load_image(path, 1.0)


def test_mask_png_round_trip(tmp_path):
    bits = rng.random((9, 9)) < 0.5
    path = tmp_path / "mask.png"
    save_mask_png(BinaryMask(bits), path)
    assert np.array_equal(load_mask_png(path).bits, bits)


def test_heatmap_binary_round_trip_exact_float32(tmp_path):
    values = rng.random((12, 15)).astype(np.float32).astype(np.float64)
    path = tmp_path / "map.hmp"
    save_heatmap(ScalarChannel(values, 0.424), path)
    back = load_heatmap(path, 0.424)
    assert back.values.shape == (12, 15)
    assert np.array_equal(back.values, values)  # float32 values survive exactly


def test_heatmap_binary_header_oracle(tmp_path):
    import struct

    values = np.arange(6, dtype=np.float64).reshape(2, 3) / 10.0
    path = tmp_path / "map.hmp"
    save_heatmap(ScalarChannel(values, 1.0), path, scale=2.0)
    raw = path.read_bytes()
    assert raw[:4] == b"HMAP"
    w, h, scale = struct.unpack("<IIf", raw[4:16])
    assert (w, h, scale) == (3, 2, 2.0)
    payload = np.frombuffer(raw[16:], dtype="<f4").reshape(2, 3)
    assert np.allclose(payload, values)
    assert np.allclose(load_heatmap(path, 1.0).values, values * 2.0, atol=1e-7)


def test_heatmap_png_round_trip_quantized(tmp_path):
    values = rng.random((8, 8))
    path = tmp_path / "map.png"
    save_heatmap(ScalarChannel(values, 1.0), path)
    back = load_heatmap(path, 1.0)
    assert np.allclose(back.values, values, atol=1.0 / 65535.0)


def test_heatmap_rejects_corrupt_file(tmp_path):
    path = tmp_path / "map.hmp"
    path.write_bytes(b"HMAPxxxx")
    with pytest.raises(RasterError):
        load_heatmap(path, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_point_set_mask_inverse_property(h, w, seed):
    r = np.random.Generator(np.random.PCG64(seed))
    bits = r.random((h, w)) < 0.4
    assert np.array_equal(BinaryMask(bits).point_set().mask().bits, bits)

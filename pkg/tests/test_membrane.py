"""Membrane description: enhancement, segmentation, contours, completeness."""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from her2scope.errors import ConfigurationError
from her2scope.membrane import (
    MembraneParams,
    enhance_dab,
    export_bundle,
    extract_contours,
    run_membrane_pipeline,
    segment_membranes,
)
from her2scope.raster import BinaryMask, ScalarChannel

rng = np.random.Generator(np.random.PCG64(17))


def _ring_channel(size=64, cy=32, cx=32, radius=18, thickness=3.0, level=0.8):
    yy, xx = np.mgrid[0:size, 0:size]
    values = np.where(np.abs(np.hypot(yy - cy, xx - cx) - radius) < thickness, level, 0.0)
    return ScalarChannel(values, 0.848)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        MembraneParams(t_weak=0.5, t_intense=0.3)
    with pytest.raises(ConfigurationError):
        MembraneParams(d=-1)
    with pytest.raises(ConfigurationError):
        MembraneParams(enhancement=(5, 120))


def test_enhance_dab_affine_oracle():
    values = rng.random((32, 32))
    out, degenerate = enhance_dab(ScalarChannel(values, 1.0), 2.0, 98.0)
    assert not degenerate
    lo, hi = np.percentile(values, [2.0, 98.0])
    want = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
    assert np.allclose(out.values, want)
    assert out.values.min() == 0.0 and out.values.max() == 1.0


def test_enhance_dab_constant_channel_degenerate():
    ch = ScalarChannel(np.full((8, 8), 0.4), 1.0)
    out, degenerate = enhance_dab(ch, 1.0, 99.0)
    assert degenerate
    assert np.array_equal(out.values, ch.values)


def test_enhance_preserves_order():
    values = rng.random((16, 16))
    out, _ = enhance_dab(ScalarChannel(values, 1.0), 10.0, 90.0)
    flat_in = values.ravel()
    flat_out = out.values.ravel()
    order = np.argsort(flat_in)
    assert np.all(np.diff(flat_out[order]) >= -1e-12)


def test_segment_nesting_invariant():
    ch = ScalarChannel(rng.random((32, 32)), 1.0)
    m_weak, m_intense = segment_membranes(ch, MembraneParams(t_weak=0.3, t_intense=0.7))
    assert m_intense.issubset(m_weak)
    assert np.array_equal(m_weak.bits, ch.values >= 0.3)
    assert np.array_equal(m_intense.bits, ch.values >= 0.7)


def test_extract_contours_closed_ring_complete():
    ch = _ring_channel()
    m_weak, m_intense = segment_membranes(ch, MembraneParams(t_weak=0.15, t_intense=0.45))
    c_weak, c_intense, labels = extract_contours(m_weak, m_intense)
    assert c_intense.issubset(c_weak)
    assert c_weak.issubset(m_weak)
    assert len(labels) == 1
    assert labels[0].complete
    assert len(labels[0].polyline) == c_weak.count()  # walk covers the ring


def test_extract_contours_open_arc_incomplete():
    ch = _ring_channel()
    values = ch.values.copy()
    values[10:18, 28:36] = 0.0  # carve a gap in the top of the ring
    m_weak, m_intense = segment_membranes(ScalarChannel(values, 0.848), MembraneParams())
    _, _, labels = extract_contours(m_weak, m_intense)
    assert len(labels) >= 1
    assert not any(lbl.complete for lbl in labels)


def test_border_truncated_ring_incomplete():
    # ring sliding off the frame edge: enclosure cut by the border is open
    ch = _ring_channel(size=64, cy=2, cx=32)
    m_weak, m_intense = segment_membranes(ch, MembraneParams())
    _, _, labels = extract_contours(m_weak, m_intense)
    assert labels and not any(lbl.complete for lbl in labels)


def test_nested_rings_only_inner_complete():
    yy, xx = np.mgrid[0:96, 0:96]
    d = np.hypot(yy - 48, xx - 48)
    values = np.where((np.abs(d - 14) < 2.5) | (np.abs(d - 30) < 2.5), 0.8, 0.0)
    m_weak, m_intense = segment_membranes(ScalarChannel(values, 1.0), MembraneParams())
    _, _, labels = extract_contours(m_weak, m_intense)
    assert len(labels) == 2
    complete_flags = sorted(lbl.complete for lbl in labels)
    assert complete_flags == [False, True]  # outer ring is not innermost


def test_extract_contours_requires_nesting():
    a = BinaryMask(np.zeros((8, 8), dtype=bool))
    b = BinaryMask(np.ones((8, 8), dtype=bool))
    with pytest.raises(ConfigurationError):
        extract_contours(a, b)


def test_bundle_invariants_on_ring():
    ch = _ring_channel(level=0.8)
    bundle = run_membrane_pipeline(ch, MembraneParams(d=5.0))
    assert bundle.m_intense.issubset(bundle.m_weak)
    assert bundle.c_intense.issubset(bundle.c_weak)
    assert bundle.c_weak.issubset(bundle.m_weak)
    assert bundle.m_weak.issubset(bundle.e_weak)
    assert bundle.m_intense.issubset(bundle.e_intense)
    assert bundle.c_weak.issubset(bundle.m_weak_enclosed)
    # ring is above t_intense everywhere: the center is enclosed by both
    assert bundle.m_intense_enclosed.bits[32, 32]
    assert bundle.m_weak_enclosed.bits[32, 32]
    assert bundle.pixel_size == 0.848


def test_weak_ring_not_in_intense_sets():
    ch = _ring_channel(level=0.3)  # above t_weak, below t_intense
    bundle = run_membrane_pipeline(ch, MembraneParams())
    assert bundle.m_intense.count() == 0
    assert bundle.c_intense.count() == 0
    assert not bundle.m_intense_enclosed.bits[32, 32]
    assert bundle.m_weak_enclosed.bits[32, 32]


def test_point_set_views_match_masks():
    ch = _ring_channel()
    bundle = run_membrane_pipeline(ch, MembraneParams())
    assert bundle.p_weak.as_set() == bundle.e_weak.point_set().as_set()
    assert bundle.p_intense_enclosed.as_set() == bundle.m_intense_enclosed.point_set().as_set()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pipeline_fuzz_invariants(seed):
    r = np.random.Generator(np.random.PCG64(seed))
    values = r.random((40, 40))
    bundle = run_membrane_pipeline(ScalarChannel(values, 1.0), MembraneParams(t_weak=0.6, t_intense=0.85, d=2.0))
    assert bundle.m_intense.issubset(bundle.m_weak)
    assert bundle.c_intense.issubset(bundle.c_weak)
    sk = bundle.c_weak.bits
    assert not np.any(sk[:-1, :-1] & sk[:-1, 1:] & sk[1:, :-1] & sk[1:, 1:])
    assert bundle.m_weak.issubset(bundle.e_weak)
    assert bundle.c_weak.issubset(bundle.m_weak_enclosed)
    assert bundle.c_intense.issubset(bundle.m_intense_enclosed)


def test_enhancement_changes_segmentation_when_enabled():
    values = rng.random((32, 32)) * 0.1  # everything below t_weak raw
    raw = run_membrane_pipeline(ScalarChannel(values, 1.0), MembraneParams())
    stretched = run_membrane_pipeline(
        ScalarChannel(values, 1.0), MembraneParams(enhancement=(1.0, 99.0))
    )
    assert raw.m_weak.count() == 0
    assert stretched.m_weak.count() > 0


def test_export_bundle_writes_masks_and_contours(tmp_path):
    bundle = run_membrane_pipeline(_ring_channel(), MembraneParams())
    export_bundle(bundle, tmp_path)
    for name in ("m_weak", "m_intense", "c_weak", "c_intense", "m_weak_enclosed", "m_intense_enclosed", "e_weak", "e_intense"):
        assert (tmp_path / f"{name}.png").exists()
    contours = json.loads((tmp_path / "contours.json").read_text())
    assert len(contours) == 1 and contours[0]["complete"] is True

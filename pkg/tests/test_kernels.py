"""Backend equivalence: the compiled kernels must match the numpy fallbacks."""

import numpy as np
import pytest

from her2scope import kernels
from her2scope.kernels import available_backends, pure

from conftest import oracle_bilateral

rng = np.random.Generator(np.random.PCG64(11))


def _native_or_skip():
    backends = available_backends()
    if "native" not in backends:
        pytest.skip("compiled backend not built")
    return backends["native"]


def test_backend_selected():
    assert kernels.BACKEND in ("pure", "native")
    assert "pure" in available_backends()


def test_bilateral_pure_matches_direct_oracle():
    values = rng.random((24, 24))
    got = pure.bilateral(values, 1.5, 0.2)
    want = oracle_bilateral(values, 1.5, 0.2)
    assert np.allclose(got, want, atol=1e-10)


def test_bilateral_native_matches_pure():
    native = _native_or_skip()
    for sigma_s, sigma_r in ((1.0, 0.1), (2.0, 0.2), (3.5, 0.5)):
        values = rng.random((64, 64)) * 2.0
        a = native.bilateral(values, sigma_s, sigma_r)
        b = pure.bilateral(values, sigma_s, sigma_r)
        assert np.allclose(a, b, atol=1e-6), f"max diff {np.abs(a - b).max()}"


def test_bilateral_constant_input_is_fixed_point():
    values = np.full((16, 16), 0.7)
    for impl in available_backends().values():
        assert np.allclose(impl.bilateral(values, 2.0, 0.2), values, atol=1e-9)


def test_bilateral_preserves_step_edge():
    # Range weighting must keep a strong step much sharper than a Gaussian blur.
    values = np.zeros((20, 20))
    values[:, 10:] = 1.0
    out = pure.bilateral(values, 2.0, 0.05)
    assert out[10, 5] < 0.05 and out[10, 15] > 0.95


def test_thinning_backends_identical():
    native = _native_or_skip()
    for seed in range(5):
        r = np.random.Generator(np.random.PCG64(seed))
        bits = r.random((48, 48)) < 0.45
        a = native.zhang_suen_thin(bits)
        b = pure.zhang_suen_thin(bits)
        assert np.array_equal(a, b)


def test_thinning_is_subset_and_idempotent_on_thin_input():
    yy, xx = np.mgrid[0:40, 0:40]
    ring = np.abs(np.hypot(yy - 20, xx - 20) - 12) < 2.5
    thin = pure.zhang_suen_thin(ring)
    assert thin.sum() > 0
    assert np.all(~thin | ring)  # subset of the input
    assert np.array_equal(pure.zhang_suen_thin(thin), thin)


def test_env_var_forces_pure_backend(tmp_path):
    import subprocess, sys

    code = "import her2scope.kernels as k; print(k.BACKEND)"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin:/usr/local/bin", "HER2SCOPE_BACKEND": "pure"},
    )
    assert out.stdout.strip() == "pure"


def test_benchmark_runs_both_backends():
    from her2scope.bench import run

    results = run(size=96, repeats=1)
    assert "pure" in results
    for timings in results.values():
        assert set(timings) == {"bilateral", "thinning"}
        assert all(t > 0 for t in timings.values())

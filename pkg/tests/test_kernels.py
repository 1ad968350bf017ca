import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tunneltime import kernels

compiled = pytest.mark.skipif(kernels.BACKEND != "cython", reason="extension not built")


def spectrum(rng, n):
    k = np.sort(rng.uniform(0.5, 4.0, n))
    return k, 0.5 * k**2, rng.normal(size=n) + 1j * rng.normal(size=n)


@compiled
@pytest.mark.parametrize("uniform", [True, False])
def test_synthesize_backends_agree(rng, uniform):
    k, E, a = spectrum(rng, 300)
    y = np.linspace(-40, 60, 1000) if uniform else np.sort(rng.uniform(-40, 60, 1000))
    t = np.array([-3.0, 0.0, 7.5])
    ref = kernels.synthesize(y, t, k, E, a, 2.0, backend="python")
    out = kernels.synthesize(y, t, k, E, a, 2.0, backend="cython")
    assert np.max(np.abs(out - ref)) < 1e-10 * np.max(np.abs(ref))


@compiled
@settings(max_examples=25, deadline=None)
@given(
    n_layers=st.integers(1, 12),
    seed=st.integers(0, 2**32 - 1),
    evanescent=st.booleans(),
)
def test_transfer_backends_agree(n_layers, seed, evanescent):
    rng = np.random.default_rng(seed)
    k_amb = rng.uniform(0.2, 3.0, 16).astype(complex)
    k_layers = rng.uniform(0.2, 5.0, (16, n_layers)).astype(complex)
    if evanescent:
        k_layers *= 1j
    widths = rng.uniform(0.1, 2.0, n_layers)
    ref = kernels.transfer_amplitude(k_layers, widths, k_amb, k_amb, backend="python")
    out = kernels.transfer_amplitude(k_layers, widths, k_amb, k_amb, backend="cython")
    assert np.allclose(out, ref, rtol=1e-11, atol=0)


def test_empty_layer_stack_is_transparent():
    k = np.array([1.0, 2.0], dtype=complex)
    t = kernels.transfer_amplitude(np.zeros((2, 0), complex), np.zeros(0), k, k, backend="python")
    assert np.allclose(t, 1.0)


def test_synthesize_single_mode():
    y = np.linspace(0, 5, 11)
    out = kernels.synthesize(y, [2.0], [1.5], [1.125], [2.0 + 0j], 1.0, backend="python")
    assert np.allclose(out[0], 2.0 * np.exp(1j * (1.5 * (y - 1.0) - 1.125 * 2.0)))


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.synthesize([0.0], [0.0], [1.0], [0.5], [1.0], backend="fortran")


def test_environment_forces_fallback():
    env = dict(os.environ, TUNNELTIME_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from tunneltime import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"

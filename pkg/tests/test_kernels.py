import os
import subprocess
import sys

import numpy as np
import pytest

from truncnoise import _fallback, kernels

needs_compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled kernels not built")


def loop_conv(a, b):
    out = [0.0] * (len(a) + len(b) - 1)
    for k in range(len(out)):
        acc = 0.0
        for i in range(len(a)):
            j = k - i
            if 0 <= j < len(b):
                acc = acc + a[i] * b[j]
        out[k] = acc
    return np.array(out)


def random_stack(rng, k=30, n=200):
    x = np.linspace(-5, 0, n)
    return x, rng.normal(), rng.normal(size=k), np.sort(rng.uniform(-6, 1, k)), float(rng.uniform(1, 800))


@pytest.fixture
def backend():
    previous = kernels.BACKEND
    yield kernels.use_backend
    kernels.use_backend(previous)


@pytest.mark.parametrize("name", ["numpy", pytest.param("cython", marks=needs_compiled)])
def test_conv_matches_loop_bitwise(backend, name):
    backend(name)
    rng = np.random.default_rng(0)
    for m, n in ((1, 1), (3, 7), (40, 40), (101, 13)):
        a, b = rng.random(m), rng.random(n)
        assert np.array_equal(kernels.conv_full(a, b), loop_conv(a, b))


@needs_compiled
def test_backends_agree(backend):
    rng = np.random.default_rng(1)
    for _ in range(20):
        x, a, b, f, slope = random_stack(rng)
        gs = rng.normal(size=x.size)
        backend("numpy")
        s_np = kernels.stack_forward(x, a, b, f, slope)
        g_np = kernels.stack_backward(x, a, b, f, slope, gs)
        backend("cython")
        s_cy = kernels.stack_forward(x, a, b, f, slope)
        g_cy = kernels.stack_backward(x, a, b, f, slope, gs)
        assert np.allclose(s_np, s_cy, rtol=1e-13, atol=0)
        assert g_np[0] == pytest.approx(g_cy[0], rel=1e-11, abs=1e-12)
        assert np.allclose(g_np[1], g_cy[1], rtol=1e-11, atol=1e-12)
        assert np.allclose(g_np[2], g_cy[2], rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("name", ["numpy", pytest.param("cython", marks=needs_compiled)])
def test_forward_is_monotone_and_finite_when_saturated(backend, name):
    backend(name)
    x = np.linspace(-5, 0, 500)
    b = np.ones(4)
    f = np.array([-4.0, -2.0, -1.0, -0.5])
    s = kernels.stack_forward(x, 0.0, b, f, 1e6)
    assert np.all(np.isfinite(s)) and np.all(np.diff(s) >= 0)
    _, gb, gf = kernels.stack_backward(x, 0.0, b, f, 1e6, np.ones_like(x))
    assert np.all(np.isfinite(gb)) and np.all(np.isfinite(gf))


def test_unknown_backend(backend):
    with pytest.raises(ValueError):
        backend("fortran")


def test_environment_forces_fallback():
    env = dict(os.environ, TRUNCNOISE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import truncnoise.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_fallback_module_is_numpy_only():
    assert _fallback.conv_full(np.ones(2), np.ones(2)).tolist() == [1.0, 2.0, 1.0]

"""The compiled kernels and the numpy fallback must agree exactly on
integer outputs and to float tolerance on transcendentals."""

import numpy as np
import pytest

from relher import kernels
from relher.kernels import _fallback

pytestmark = pytest.mark.skipif(
    kernels.IMPL != "compiled",
    reason="compiled extension not available; fallback is the implementation")


def _random_case(rng, dtype, m=200, k=16, n_segments=37):
    msgs = rng.standard_normal((m, k)).astype(dtype)
    targets = rng.integers(0, n_segments, size=m).astype(np.int64)
    return np.ascontiguousarray(msgs), targets, n_segments


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_scatter_max_matches_fallback(dtype):
    rng = np.random.default_rng(1)
    msgs, targets, n = _random_case(rng, dtype)
    out_c, arg_c = kernels.scatter_max(msgs, targets, n)
    out_f, arg_f = _fallback.scatter_max(msgs, targets, n)
    assert np.array_equal(out_c, out_f)
    assert np.array_equal(arg_c, arg_f)
    grad_out = np.ascontiguousarray(rng.standard_normal(out_c.shape)
                                    .astype(dtype))
    g_c = kernels.scatter_max_grad(grad_out, arg_c, msgs.shape[0])
    g_f = _fallback.scatter_max_grad(grad_out, arg_f, msgs.shape[0])
    assert np.array_equal(g_c, g_f)


def test_scatter_max_tie_routing_matches_fallback():
    msgs = np.ascontiguousarray(
        np.array([[1.0, 2.0], [1.0, 0.0], [1.0, 2.0]]))
    targets = np.array([0, 0, 0], dtype=np.int64)
    for impl in (kernels, _fallback):
        out, arg = impl.scatter_max(msgs, targets, 2)
        assert np.array_equal(out, [[1.0, 2.0], [0.0, 0.0]])
        assert np.array_equal(arg, [[0, 0], [-1, -1]])


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_segment_sum_matches_fallback(dtype):
    rng = np.random.default_rng(2)
    x, seg, n = _random_case(rng, dtype)
    assert np.allclose(kernels.segment_sum(x, seg, n),
                       _fallback.segment_sum(x, seg, n),
                       atol=0 if dtype == np.float64 else 1e-5, rtol=1e-6)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_mish_matches_fallback(dtype):
    rng = np.random.default_rng(3)
    x = np.ascontiguousarray(
        (rng.standard_normal((50, 8)) * 10).astype(dtype))
    tol = 1e-12 if dtype == np.float64 else 1e-6
    assert np.allclose(kernels.mish(x), _fallback.mish(x), atol=tol)
    g = np.ascontiguousarray(rng.standard_normal(x.shape).astype(dtype))
    assert np.allclose(kernels.mish_grad(x, g), _fallback.mish_grad(x, g),
                       atol=tol * 10)


def test_mish_extreme_inputs_are_finite():
    x = np.ascontiguousarray(np.array([[-1e4, -50.0, 0.0, 50.0, 1e4]]))
    for impl in (kernels, _fallback):
        y = impl.mish(x)
        g = impl.mish_grad(x, np.ones_like(x))
        assert np.all(np.isfinite(y)) and np.all(np.isfinite(g))
        assert y[0, 2] == 0.0
        assert y[0, -1] == pytest.approx(1e4)

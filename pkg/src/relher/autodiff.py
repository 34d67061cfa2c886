"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just the operations the relational Q-network needs. Forward passes build
a tape of closures; ``backward`` walks it in reverse topological order.
Aggregation-style ops (gather/scatter-max/segment-sum) and the mish
nonlinearity dispatch to the compiled kernels when available.

``no_grad()`` disables tape construction for rollout/evaluation passes.
"""

from __future__ import annotations

import contextlib

import numpy as np

from . import kernels


class Tensor:
    __slots__ = ("data", "grad", "parents", "bwd")

    def __init__(self, data, parents=(), bwd=None):
        self.data = data
        self.grad = None
        self.parents = parents
        self.bwd = bwd

    @property
    def shape(self):
        return self.data.shape


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled():
    return _grad_enabled


def _accum(t, g):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def parameter(data):
    return Tensor(np.asarray(data))


def constant(data):
    return Tensor(np.asarray(data))


def backward(root):
    """Accumulate gradients of ``root`` (a scalar) into every tape leaf."""
    if root.data.size != 1:
        raise ValueError("backward expects a scalar loss")
    topo = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    root.grad = np.ones_like(root.data)
    for node in reversed(topo):
        if node.bwd is not None and node.grad is not None:
            node.bwd(node.grad)


# -- primitive operations ------------------------------------------------


def matmul(a, b):
    data = a.data @ b.data
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (a, b))

    def bwd(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    out.bwd = bwd
    return out


def add_row(a, bias):
    """(m, k) + (k,) with broadcast over rows."""
    data = a.data + bias.data
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (a, bias))

    def bwd(g):
        _accum(a, g)
        _accum(bias, g.sum(axis=0))

    out.bwd = bwd
    return out


def add(a, b):
    data = a.data + b.data
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (a, b))

    def bwd(g):
        _accum(a, g)
        _accum(b, g)

    out.bwd = bwd
    return out


def concat_cols(a, b):
    data = np.concatenate((a.data, b.data), axis=1)
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (a, b))
    split = a.data.shape[1]

    def bwd(g):
        _accum(a, g[:, :split])
        _accum(b, g[:, split:])

    out.bwd = bwd
    return out


def concat_rows(tensors):
    if len(tensors) == 1:
        return tensors[0]
    data = np.concatenate([t.data for t in tensors], axis=0)
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, tuple(tensors))
    sizes = [t.data.shape[0] for t in tensors]

    def bwd(g):
        start = 0
        for t, size in zip(tensors, sizes):
            _accum(t, g[start:start + size])
            start += size

    out.bwd = bwd
    return out


def reshape(x, shape):
    data = np.ascontiguousarray(x.data).reshape(shape)
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (x,))

    def bwd(g):
        _accum(x, g.reshape(x.data.shape))

    out.bwd = bwd
    return out


def gather_rows(x, idx):
    """Row lookup x[idx]; the backward pass is a segment sum."""
    data = x.data[idx]
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (x,))

    def bwd(g):
        _accum(x, kernels.segment_sum(np.ascontiguousarray(g), idx,
                                      x.data.shape[0]))

    out.bwd = bwd
    return out


def mish(x):
    xd = np.ascontiguousarray(x.data)
    data = kernels.mish(xd)
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (x,))

    def bwd(g):
        _accum(x, kernels.mish_grad(xd, np.ascontiguousarray(g)))

    out.bwd = bwd
    return out


def scatter_max(msgs, targets, n_segments):
    """Per-segment elementwise max; empty segments yield 0. The gradient
    routes to the first argmax contributor only."""
    md = np.ascontiguousarray(msgs.data)
    data, argmax = kernels.scatter_max(md, targets, n_segments)
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (msgs,))

    def bwd(g):
        _accum(msgs, kernels.scatter_max_grad(np.ascontiguousarray(g),
                                              argmax, md.shape[0]))

    out.bwd = bwd
    return out


def segment_sum(x, segments, n_segments):
    data = kernels.segment_sum(np.ascontiguousarray(x.data), segments,
                               n_segments)
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (x,))

    def bwd(g):
        _accum(x, g[segments])

    out.bwd = bwd
    return out


def layer_norm(x, gain, bias, eps=1e-5):
    """Row-wise normalization with learnable gain and bias."""
    mu = x.data.mean(axis=1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    data = xhat * gain.data + bias.data
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (x, gain, bias))

    def bwd(g):
        dxhat = g * gain.data
        dx = inv * (dxhat - dxhat.mean(axis=1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=1, keepdims=True))
        _accum(x, dx)
        _accum(gain, (g * xhat).sum(axis=0))
        _accum(bias, g.sum(axis=0))

    out.bwd = bwd
    return out


def sub_const(x, c):
    data = x.data - c
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (x,))
    out.bwd = lambda g: _accum(x, g)
    return out


def huber(x, delta=1.0):
    absx = np.abs(x.data)
    quad = absx <= delta
    data = np.where(quad, 0.5 * x.data * x.data, delta * (absx - 0.5 * delta))
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (x,))

    def bwd(g):
        _accum(x, g * np.clip(x.data, -delta, delta))

    out.bwd = bwd
    return out


def weighted_sum(x, weights):
    """Scalar: sum(x * weights) for a constant weight array."""
    data = np.asarray((x.data * weights).sum())
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (x,))

    def bwd(g):
        _accum(x, g * weights)

    out.bwd = bwd
    return out


def add_scalar(a, b):
    data = a.data + b.data
    if not _grad_enabled:
        return Tensor(data)
    out = Tensor(data, (a, b))

    def bwd(g):
        _accum(a, g)
        _accum(b, g)

    out.bwd = bwd
    return out

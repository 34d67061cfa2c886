"""Pure-numpy implementations of the message-passing hot kernels.

Semantics are identical to the compiled versions in ``_speedups.pyx``;
``tests/test_kernels.py`` checks both against each other. Empty segments
aggregate to 0 and report argmax -1. Ties route to the first
contributing row, in row order.
"""

from __future__ import annotations

import numpy as np


def scatter_max(msgs, targets, n_segments):
    m, k = msgs.shape
    out = np.full((n_segments, k), -np.inf, dtype=msgs.dtype)
    np.maximum.at(out, targets, msgs)
    row_ids = np.where(msgs == out[targets], np.arange(m)[:, None], m)
    arg = np.full((n_segments, k), m, dtype=np.int64)
    np.minimum.at(arg, targets, row_ids)
    empty = arg == m
    arg[empty] = -1
    out[empty] = 0.0
    return out, arg


def scatter_max_grad(grad_out, argmax, n_rows):
    grad = np.zeros((n_rows, grad_out.shape[1]), dtype=grad_out.dtype)
    valid = argmax >= 0
    cols = np.broadcast_to(np.arange(grad_out.shape[1]), argmax.shape)
    np.add.at(grad, (argmax[valid], cols[valid]), grad_out[valid])
    return grad


def segment_sum(x, segments, n_segments):
    out = np.zeros((n_segments, x.shape[1]), dtype=x.dtype)
    np.add.at(out, segments, x)
    return out


def mish(x):
    sp = np.logaddexp(0.0, x)
    return x * np.tanh(sp)


def mish_grad(x, grad_y):
    sp = np.logaddexp(0.0, x)
    t = np.tanh(sp)
    sig = np.exp(-np.logaddexp(0.0, -x))
    return grad_y * (t + x * (1.0 - t * t) * sig)

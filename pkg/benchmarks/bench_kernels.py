#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Covers the isolated hot kernels and an end-to-end forward/backward pass
of the Q-network on a realistic batch. Run after installing the package:

    python3 benchmarks/bench_kernels.py
"""

import os
import time

import numpy as np


def timeit(fn, repeat=200):
    fn()  # warm up
    best = float("inf")
    for _ in range(5):
        start = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - start) / repeat)
    return best


def bench_kernels():
    from relher import kernels
    from relher.kernels import _fallback

    if kernels.IMPL != "compiled":
        print("compiled extension not available; nothing to compare")
        return

    rng = np.random.default_rng(0)
    m, k, segments = 4000, 32, 900
    msgs = np.ascontiguousarray(rng.standard_normal((m, k)))
    targets = rng.integers(0, segments, m).astype(np.int64)
    _, argmax = kernels.scatter_max(msgs, targets, segments)
    grad = np.ascontiguousarray(rng.standard_normal((segments, k)))

    cases = [
        ("scatter_max", lambda im: im.scatter_max(msgs, targets, segments)),
        ("scatter_max_grad",
         lambda im: im.scatter_max_grad(grad, argmax, m)),
        ("segment_sum", lambda im: im.segment_sum(msgs, targets, segments)),
        ("mish", lambda im: im.mish(msgs)),
        ("mish_grad", lambda im: im.mish_grad(msgs, msgs)),
    ]
    print(f"{'kernel':<18} {'compiled':>10} {'fallback':>10} {'speedup':>8}")
    for name, call in cases:
        fast = timeit(lambda: call(kernels))
        slow = timeit(lambda: call(_fallback))
        print(f"{name:<18} {fast * 1e6:>8.1f}us {slow * 1e6:>8.1f}us "
              f"{slow / fast:>7.1f}x")


def bench_forward():
    import relher.autodiff as ad
    from relher.generators import generate_instances
    from relher.qnet import EncodedBatch, QNetwork, Vocabulary, encode_current

    problems = generate_instances("blocks", (4, 6), 0)
    vocab = Vocabulary.from_domain(problems[0].domain)
    encs = [encode_current(p, p.init, p.goal, vocab)
            for p in problems for _ in range(10)]
    batch = EncodedBatch(encs)
    net = QNetwork(vocab, layers=10, width=32, dtype=np.float32)
    weights = np.ones(batch.n_actions, dtype=np.float32)

    def fwd():
        net.forward(batch)

    def fwd_bwd():
        q, _ = net.forward(batch, train=True, rng=None)
        net.zero_grad()
        ad.backward(ad.weighted_sum(q, weights))

    print(f"\nend-to-end ({batch.n_graphs} graphs, {batch.n_objects} "
          f"objects, 10 layers, impl={os.environ.get('RELHER_PURE') and 'fallback' or 'auto'})")
    print(f"forward           {timeit(fwd, repeat=20) * 1e3:>8.2f}ms")
    print(f"forward+backward  {timeit(fwd_bwd, repeat=20) * 1e3:>8.2f}ms")


if __name__ == "__main__":
    from relher import kernels

    print(f"selected kernel implementation: {kernels.IMPL}")
    bench_kernels()
    bench_forward()

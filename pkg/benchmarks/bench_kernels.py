"""Benchmark the compiled kernels against the NumPy fallback.

Runs each hot kernel at the shapes the training loop actually uses, plus a
short end-to-end training stretch under both backends.

    python benchmarks/bench_kernels.py [--steps 64]
"""

import argparse
import time

import numpy as np

from voxprofile.backend import ops_py

try:
    from voxprofile.backend import _kernels as ops_cy
except ImportError:
    ops_cy = None

SHAPES = [
    ("encoder frame fwd", (40, 32), 64),
    ("encoder head fwd", (1, 64), 32),
    ("decoder hidden fwd", (1, 52), 128),
    ("decoder output fwd", (1, 128), 1280),
    ("probe fwd", (32, 1280), 20),
]


def time_call(fn, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps * 1e6


def bench_kernels():
    rng = np.random.default_rng(0)
    mods = [("numpy", ops_py)] + ([("cython", ops_cy)] if ops_cy else [])
    print(f"{'kernel':26s}" + "".join(f"{name + ' fwd':>14s}{name + ' bwd':>14s}" for name, _ in mods))
    for label, xs, dout in SHAPES:
        x = rng.standard_normal(xs)
        w = rng.standard_normal((dout, xs[1]))
        b = rng.standard_normal(dout)
        dy = rng.standard_normal((xs[0], dout))
        reps = max(20, int(2e6 / (xs[0] * xs[1] * dout)))
        row = f"{label:26s}"
        for _, mod in mods:
            y, pre = mod.dense_forward(x, w, b, 1)
            fwd = time_call(lambda: mod.dense_forward(x, w, b, 1), reps)
            bwd = time_call(lambda: mod.dense_backward(x, w, pre, y, 1, dy), reps)
            row += f"{fwd:12.1f}us{bwd:12.1f}us"
        print(row)

    n = 200_000
    p = rng.standard_normal(n)
    g = rng.standard_normal(n)
    row = f"{'adam update (200k params)':26s}"
    for _, mod in mods:
        m = np.zeros(n)
        v = np.zeros(n)
        t = time_call(lambda: mod.adam_step(p, g, m, v, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.01), 50)
        row += f"{t:12.1f}us{'':14s}"
    print(row)


def bench_training(steps):
    import os

    from voxprofile import corpus as cp
    from voxprofile import train as tr
    from voxprofile.config import config_for_variant

    print(f"\nend-to-end training, {steps} steps, default corpus:")
    c = cp.generate_corpus(64, 20, seed=100)
    cp.split_speakers(c, 0.2, seed=101)
    cfg = config_for_variant(
        "vae_triplet_shuffle", corpus_seed=100, split_seed=101, train_seed=1,
        train_steps=steps,
    )
    import voxprofile.backend as bk

    # the backend is fixed at import; report which one this process used and
    # suggest rerunning under the other
    t0 = time.perf_counter()
    tr.train_model(c, cfg)
    dt = time.perf_counter() - t0
    print(f"  backend={bk.backend_name():7s} {dt:6.1f}s total, {dt/steps*1000:6.1f} ms/step")
    other = "numpy" if bk.backend_name() == "cython" else "cython"
    print(f"  (rerun with VOXPROFILE_BACKEND={other} to compare)")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=64)
    args = parser.parse_args()
    bench_kernels()
    bench_training(args.steps)

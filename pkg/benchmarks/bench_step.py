"""Benchmark the tracking-step kernel: compiled extension vs pure numpy.

Usage: python3 benchmarks/bench_step.py [--agents N] [--dim n] [--reps R]
"""

import argparse
import time

import numpy as np

from admmtrack import _fallback, graph, problems

try:
    from admmtrack import _core

    HAVE_COMPILED = True
except ImportError:
    _core = None
    HAVE_COMPILED = False


def make_inputs(N: int, n: int, seed: int = 0):
    p = problems.random_quadratic(N, n, 1, 5, -10, 20, seed)
    t = graph.erdos_renyi(N, 0.4, seed)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-5, 5, (N, n))
    z = rng.uniform(-5, 5, (t.n_slots, 2 * n))
    act = rng.integers(0, 2, N).astype(np.uint8)
    zflag = (
        act[t.slot_owner]
        & rng.integers(0, 2, t.n_slots).astype(np.uint8)
        & act[t.slot_peer]
    )
    grad = p.local_gradients(x)
    return (x, grad, z, act, zflag, t.degrees, t.slot_owner, t.slot_rev,
            t.slot_peer, 0.3, 0.4, 0.6, 0.7)


def bench(fn, args, reps: int) -> float:
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - t0) / reps


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--agents", type=int, default=50)
    ap.add_argument("--dim", type=int, default=4)
    ap.add_argument("--reps", type=int, default=2000)
    args = ap.parse_args()

    inputs = make_inputs(args.agents, args.dim)
    t_pure = bench(_fallback.tracking_step, inputs, args.reps)
    print(f"agents={args.agents} dim={args.dim} reps={args.reps}")
    print(f"pure numpy : {t_pure * 1e6:9.2f} us/step")
    if HAVE_COMPILED:
        t_comp = bench(_core.tracking_step, inputs, args.reps)
        print(f"compiled   : {t_comp * 1e6:9.2f} us/step")
        print(f"speedup    : {t_pure / t_comp:9.2f}x")
    else:
        print("compiled   : unavailable (extension not built)")


if __name__ == "__main__":
    main()

"""Compare the numba and pure-numpy norm kernels.

Times batched operator norms, distance scans and nearest-element queries
on random unitary stacks, checks that both backends agree, and prints a
table of best-of-N wall times.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 20000]
"""

import argparse
import time

import numpy as np

from sknet import _kernels as K
from sknet import matcore as mc


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def unitary_stack(n, d, seed):
    g = mc.rng(seed, d)
    return np.ascontiguousarray(np.array([mc.haar_sample(d, g) for _ in range(n)]))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--dims", default="2,4,8")
    args = ap.parse_args()

    if not K.HAVE_NUMBA:
        print("numba is not installed; only the numpy kernels can run")
        return

    print(f"{'kernel':<14}{'d':>3}{'n':>8}{'numpy s':>11}{'numba s':>11}{'speedup':>9}{'max rel diff':>14}")
    for d in (int(x) for x in args.dims.split(",")):
        stack = unitary_stack(args.n, d, 0)
        target = mc.haar_sample(d, 1)
        diffs = np.ascontiguousarray(stack - target)
        cases = [
            ("opnorm_stack", lambda: K.opnorm_stack_numpy(diffs), lambda: K.opnorm_stack_numba(diffs)),
            ("dists", lambda: K.dists_numpy(stack, target), lambda: K.dists_numba(stack, target)),
            ("nearest", lambda: K.nearest_numpy(stack, target), lambda: K.nearest_numba(stack, target)),
        ]
        for name, f_np, f_nb in cases:
            f_nb()  # compile outside the timed region
            t_np, r_np = best_of(f_np, args.repeat)
            t_nb, r_nb = best_of(f_nb, args.repeat)
            a = np.atleast_1d(np.asarray(r_np[1] if name == "nearest" else r_np, dtype=float))
            b = np.atleast_1d(np.asarray(r_nb[1] if name == "nearest" else r_nb, dtype=float))
            rel = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
            print(f"{name:<14}{d:>3}{args.n:>8}{t_np:>11.4f}{t_nb:>11.4f}{t_np / t_nb:>9.1f}{rel:>14.2e}")


if __name__ == "__main__":
    main()

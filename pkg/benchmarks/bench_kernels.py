"""Compare the compiled kernels against the pure-Python/numpy fallback.

Run ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Prints the median
wall time per call for each kernel and backend plus the speed-up.
"""

import argparse
import statistics
import time

import numpy as np

from comatch import kernels


def _cases(rng):
    x = rng.standard_normal((64, 80, 64)).astype(np.float32)
    w = rng.standard_normal((3, 3, 64, 64)).astype(np.float32)
    wd = rng.standard_normal((4, 4, 64)).astype(np.float32)
    c = rng.standard_normal((64, 80)).astype(np.float32)
    S = rng.random((320, 320)).astype(np.float32)
    C = rng.standard_normal((64, 64)).astype(np.float32)
    A = rng.standard_normal((9, 9))
    A = A @ A.T
    X = rng.standard_normal((32, 8, 9))
    Ab = X.transpose(0, 2, 1) @ X  # a RANSAC chunk of 8-point normal matrices
    return {
        "conv2d 64x80x64 3x3": lambda m: m.conv2d(x, w, 1, 1),
        "depthwise_conv2d 4x4/4": lambda m: m.depthwise_conv2d(x, wd, 4, 0),
        "max_pool2d 4": lambda m: m.max_pool2d(x, 4),
        "weighted_pool 4": lambda m: m.weighted_pool(x, c, 4),
        "mutual_nn 320x320": lambda m: m.mutual_nn(S),
        "local_mnn_best 64x64": lambda m: m.local_mnn_best(C, 0.0),
        "jacobi_eigh 9x9": lambda m: m.jacobi_eigh(A, 1e-12, 100),
        "jacobi 32 x 9x9 batched": lambda m: _batch_eigh(m, Ab),
    }


def _batch_eigh(m, A):
    if hasattr(m, "jacobi_eigh_batch"):
        return m.jacobi_eigh_batch(A, 1e-12, 100)
    return [m.jacobi_eigh(a, 1e-12, 100) for a in A]  # what the dispatcher does for the compiled backend


def _time(fn, repeat):
    fn()  # warm-up
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    backends = kernels.backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is available")
    rng = np.random.default_rng(0)
    names = list(backends)
    print(f"{'kernel':<26s}" + "".join(f"{n:>14s}" for n in names) + ("   speed-up" if len(names) > 1 else ""))
    for label, fn in _cases(rng).items():
        t = {n: _time(lambda: fn(m), args.repeat) for n, m in backends.items()}
        row = f"{label:<26s}" + "".join(f"{t[n] * 1e3:>12.3f}ms" for n in names)
        if len(names) > 1:
            row += f"   {t['python'] / t['compiled']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()

"""Time the numba kernels against the pure-numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once on both backends before timing so numba compilation
is excluded. Reports the best of ``--repeat`` runs.
"""

import argparse
import timeit

import numpy as np

from brownreg.kernels import get_backend


def _cases():
    rng = np.random.default_rng(0)
    ids = np.arange(2000, dtype=np.uint64)
    dW = rng.normal(size=(2000, 256)) * 0.05
    coef = [rng.normal(size=256) for _ in range(4)]
    dt = np.full(256, 1.0 / 256)
    x = np.linspace(-3.0, 3.0, 4001)
    psi = np.exp(-x * x) + 0.01
    fx = x * x
    return {
        "standard_normals 2000x256": lambda k: k.standard_normals(42, 0, ids, 0, 256),
        "em_affine 2000x256": lambda k: k.em_affine(0.0, dt, dW, *coef),
        "local_transition 4001 nodes": lambda k: k.local_transition(x, psi, fx, 1e-3, 8 * 1e-3 ** 0.5),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = {name: get_backend(name) for name in ("numpy", "numba")}
    print(f"{'kernel':32s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for label, call in _cases().items():
        best = {}
        for name, k in backends.items():
            call(k)  # warm-up / JIT
            best[name] = min(timeit.repeat(lambda: call(k), number=1, repeat=args.repeat))
        print(f"{label:32s} {1e3 * best['numpy']:11.2f} {1e3 * best['numba']:11.2f} "
              f"{best['numpy'] / best['numba']:8.1f}x")


if __name__ == "__main__":
    main()

"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-N wall times per kernel and checks that both backends agree.
"""
import argparse
import timeit

import numpy as np

from smoothlab import _pykernels

try:
    from smoothlab import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    phi = np.sort(rng.normal(size=2_000_000))
    w = rng.random(phi.size)
    alphas = np.linspace(-3, 3, 50_000)
    yield "window_max (2e6 points)", lambda m: m.window_max(phi, w, 1e-3, -3.0, 3.0)
    yield "window_sums (2e6 points, 5e4 windows)", lambda m: m.window_sums(phi, w, alphas, 1e-3)

    n, k = 32, 4
    coords = (np.arange(n) - n // 2).reshape(-1, 1)
    signs = np.array([-1.0] + [1.0] * k)
    lphi = coords[:, 0].astype(float) ** 3
    ow = 1.0 / (1.0 + coords[:, 0] ** 2.0)
    iw = np.ones(n)
    V = rng.normal(size=(20, k + 1, n)) + 1j * rng.normal(size=(20, k + 1, n))
    yield "lattice_form (n=32, k=4, 20 trials)", lambda m: m.lattice_form(coords, n, signs, lphi, ow, iw,
                                                                          -0.49, V)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    if _kernels is None:
        print("compiled extension not available; timing the numpy fallback only")
    print(f"{'kernel':<40}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for label, fn in cases(rng):
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{label:<40}{t_py:>12.4f}{'-':>12}{'-':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        a, b = np.asarray(fn(_pykernels)), np.asarray(fn(_kernels))
        agree = np.allclose(a, b, rtol=1e-10, atol=1e-12)
        print(f"{label:<40}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>9.1f}x"
              + ("" if agree else "  MISMATCH"))


if __name__ == "__main__":
    main()

"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each row reports the best wall time of both backends and checks that they agree.
"""

import argparse
import timeit

import numpy as np

from holodisc import _pykernels

try:
    from holodisc import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _coeffs(rng, k, l):
    return np.ascontiguousarray(rng.normal(size=(k, l)) + 1j * rng.normal(size=(k, l)))


def cases(rng):
    for deg in (8, 16, 32):
        a, b = _coeffs(rng, deg + 1, deg + 1), _coeffs(rng, deg + 1, deg + 1)
        kmax = 2 * deg + 1
        yield f"poly_mul degree {deg}", "poly_mul", (a, b, kmax, kmax)
    for n in (500, 1500, 3000):
        pts = rng.uniform(-1, 1, size=(n, 2))
        vals = rng.normal(size=(n, 2))
        yield f"holder_max {n} points", "holder_max", (pts, vals, 0.5)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the numpy fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'case':<24}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}  agree")
    for label, name, argset in cases(rng):
        py = getattr(_pykernels, name)
        t_py = min(timeit.repeat(lambda: py(*argset), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{label:<24}{1e3 * t_py:>12.3f}{'-':>13}{'-':>9}  -")
            continue
        cy = getattr(_ckernels, name)
        t_cy = min(timeit.repeat(lambda: cy(*argset), number=1, repeat=args.repeat))
        ra, rb = py(*argset), cy(*argset)
        agree = np.allclose(ra, rb, rtol=1e-12, atol=1e-12)
        print(f"{label:<24}{1e3 * t_py:>12.3f}{1e3 * t_cy:>13.3f}{t_py / t_cy:>9.1f}  {agree}")


if __name__ == "__main__":
    main()

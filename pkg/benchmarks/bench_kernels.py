"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times the stencil apply, one preconditioned CG solve, the 2D principal
eigenpair, and a full logistic solve, under each backend.
"""
import argparse
import time

import numpy as np

from competition import kernels
from competition.eigen import principal_eigenpair
from competition.expr import parse
from competition.lingrid import Grid, cg_array, laplacian_array
from competition.logistic import solve_logistic


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    g1 = Grid.unit_interval(2000)
    g2 = Grid.unit_square(200)
    rng = np.random.default_rng(0)
    u2 = rng.standard_normal(g2.size)
    b1 = rng.standard_normal(g1.size)
    b2 = rng.standard_normal(g2.size)
    f = parse("12 - u", 1)
    return [
        ("laplacian 200x200", lambda: laplacian_array(g2, u2)),
        ("CG shift 16, 1D n=2000", lambda: cg_array(g1, 16.0, b1, tol=1e-10)),
        ("CG shift 16, 200x200", lambda: cg_array(g2, 16.0, b2, tol=1e-10)),
        ("eigenpair 200x200", lambda: principal_eigenpair(g2)),
        ("logistic 12-u, 1D n=399", lambda: solve_logistic(Grid.unit_interval(399), f)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["python"] + (["cython"] if kernels.COMPILED_AVAILABLE else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the numpy fallback only")
    results = {}
    for name in backends:
        kernels.use_backend(name)
        for label, fn in cases():
            results[(label, name)] = best_of(fn, args.repeat)
    print(f"{'case':28s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, _ in cases():
        row = f"{label:28s}" + "".join(f"{results[(label, b)]:11.4f}s" for b in backends)
        if len(backends) > 1:
            row += f"{results[(label, 'python')] / results[(label, 'cython')]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()

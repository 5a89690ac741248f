"""Compare the compiled MPFR kernel with the pure-Python gmpy2 fallback.

    python benchmarks/bench_kernel.py --repeat 3
"""

import argparse
import contextlib
import statistics
import time

from sturmband import SpectralParams, kernel, parse_cf
from sturmband.bandtree import enumerate_bands
from sturmband.hp import mp


@contextlib.contextmanager
def backend(impl):
    saved = kernel.trace, kernel.trace_many, kernel.solve
    kernel.trace, kernel.trace_many, kernel.solve = impl.trace, impl.trace_many, impl.solve
    try:
        yield
    finally:
        kernel.trace, kernel.trace_many, kernel.solve = saved


def timed(fn, repeat):
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def workloads(args):
    cf = parse_cf(args.alpha)
    V = mp(args.V, args.bits)
    qs = cf.quotients(args.level)
    xs = [mp(-2 + 4 * i / args.points, args.bits) for i in range(args.points)]
    tol = mp("1e-40", args.bits)
    tree = enumerate_bands(cf, SpectralParams(args.V, args.bits), 8)
    bands = tree.generations[8]
    ev = tree.evaluator

    def many():
        kernel.trace_many(qs, args.level, 1, xs, V, args.bits)

    def single():
        for x in xs[:200]:
            kernel.trace(qs, args.level, 1, x, V, args.bits)

    def solve():
        # the zero of each order-8 band's trace inside the band
        for b in bands:
            ev.solve(b.level, b.power, 0, b.lo, b.hi, tol)

    def enumerate_():
        enumerate_bands(cf, SpectralParams(args.V, args.bits), args.order)

    return {"trace_many": many, "trace x200": single, f"solve x{len(bands)}": solve,
            f"enumerate order {args.order}": enumerate_}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", default="per:1")
    ap.add_argument("--V", default="24")
    ap.add_argument("--bits", type=int, default=192)
    ap.add_argument("--level", type=int, default=10)
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--order", type=int, default=9)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    compiled = kernel.compiled_backend()
    impls = [("python", kernel.python_backend)]
    if compiled is not None:
        impls.append(("mpfr", compiled))
    else:
        print("compiled kernel not built; timing the fallback only")

    results = {}
    for name, impl in impls:
        with backend(impl):
            for label, fn in workloads(args).items():
                results[(label, name)] = timed(fn, args.repeat)

    print(f"{'workload':<22}{'python s':>12}{'mpfr s':>12}{'speedup':>10}")
    for label in workloads(args):
        py = results[(label, "python")]
        c = results.get((label, "mpfr"))
        if c is None:
            print(f"{label:<22}{py:>12.4f}{'-':>12}{'-':>10}")
        else:
            print(f"{label:<22}{py:>12.4f}{c:>12.4f}{py / c:>9.1f}x")


if __name__ == "__main__":
    main()

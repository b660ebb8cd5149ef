"""Benchmark the pure-numpy hit-time kernel against the compiled one.

Times the kernel call itself over batches of constraint rows, then times a
full chain on the one-norm model under each backend and checks the outputs
are identical.  Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --reps 5000 --iterates 50000
"""

import argparse
import time

import numpy as np

from pwhmc import kernels, zoo
from pwhmc.sampler import ChainConfig, run_chain


def make_instances(rng, m, reps):
    return [
        (
            np.ascontiguousarray(rng.normal(size=m)),
            np.ascontiguousarray(rng.normal(size=m)),
            np.ascontiguousarray(rng.normal(size=m)),
            float(rng.uniform(0.2, 7.0)),
        )
        for _ in range(reps)
    ]


def bench_kernel(backend, instances):
    kernels.set_backend(backend)
    results = []
    t0 = time.perf_counter()
    for fa, fb, h, t_max in instances:
        results.append(kernels.first_hit(fa, fb, h, t_max, 1e-9))
    elapsed = time.perf_counter() - t0
    return elapsed / len(instances), results


def bench_chain(backend, iterates, seed=7):
    kernels.set_backend(backend)
    spec = zoo.one_norm_model()
    cfg = ChainConfig(n_samples=iterates, seed=seed)
    t0 = time.perf_counter()
    out = run_chain(spec, 1, [0.2, 0.3, 0.5], cfg)
    return time.perf_counter() - t0, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=2000,
                        help="kernel calls per batch size")
    parser.add_argument("--iterates", type=int, default=20000,
                        help="chain length for the end-to-end comparison")
    parser.add_argument("--sizes", type=int, nargs="+", default=[1, 3, 8, 32],
                        help="constraint rows per kernel call")
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    if "cy" not in backends:
        print("compiled kernel not built; timing the pure-python backend only")
    prev = kernels.current_backend()
    rng = np.random.default_rng(0)

    try:
        print(f"\nkernel call time, {args.reps} reps "
              f"(microseconds per call):")
        header = f"{'rows':>6} {'py':>10}"
        if "cy" in backends:
            header += f" {'cy':>10} {'speedup':>8}"
        print(header)
        for m in args.sizes:
            instances = make_instances(rng, m, args.reps)
            t_py, r_py = bench_kernel("py", instances)
            line = f"{m:>6} {t_py * 1e6:>10.2f}"
            if "cy" in backends:
                t_cy, r_cy = bench_kernel("cy", instances)
                line += f" {t_cy * 1e6:>10.2f} {t_py / t_cy:>7.1f}x"
                assert r_py == r_cy, "backends disagreed on kernel results"
            print(line)

        print(f"\none-norm chain, {args.iterates} iterates:")
        t_py, out_py = bench_chain("py", args.iterates)
        print(f"{'py':>6} {t_py:>10.3f} s "
              f"({args.iterates / t_py:,.0f} iterates/s)")
        if "cy" in backends:
            t_cy, out_cy = bench_chain("cy", args.iterates)
            print(f"{'cy':>6} {t_cy:>10.3f} s "
                  f"({args.iterates / t_cy:,.0f} iterates/s)  "
                  f"speedup {t_py / t_cy:.2f}x")
            same = (np.array_equal(out_py.X, out_cy.X)
                    and np.array_equal(out_py.R, out_cy.R))
            print(f"chain outputs identical across backends: {same}")
            assert same, "backends disagreed on chain outputs"
    finally:
        kernels.set_backend(prev)


if __name__ == "__main__":
    main()

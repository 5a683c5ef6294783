"""Time the compiled path kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--paths N] [--repeat R]

Both backends draw identical per-path streams, so the table also confirms
that they agree on each workload before reporting speed.
"""

import argparse
import time

import numpy as np

from fluctua import _backend, mc
from fluctua import fluctuation as fl

WORKLOADS = [
    ("Z0, +/-1 walk p=0.6", mc.StepFamily.simple(0.6), "Z0", {}),
    ("Z0, +/-1 walk p=0.52", mc.StepFamily.simple(0.52), "Z0", {}),
    ("Z0, lattice {-2,1,3}", mc.StepFamily.from_lattice(
        fl.LatticeStepLaw((-2, 1, 3), (0.4, 0.35, 0.25))), "Z0", {}),
    ("min, normal delta=0.1", mc.StepFamily.shift("normal", 0.1), "min", {}),
    ("Zz, uniform delta=0.1", mc.StepFamily.shift("uniform", 0.1, 1.0), "Zz", {"level": 2.0}),
    ("lastzero, N=2000", mc.StepFamily.simple(0.51), "lastzero", {"horizon": 2000}),
    ("zeros_count, p=0.55", mc.StepFamily.simple(0.55), "zeros_count", {}),
]


def best_of(cfg, backend, repeat):
    best, res = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = mc.simulate(cfg, backend)
        best = min(best, time.perf_counter() - t0)
    return best, res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _backend.compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    print(f"{args.paths} paths, best of {args.repeat}, one worker")
    print(f"{'workload':28s} {'compiled s':>11s} {'python s':>10s} {'speedup':>8s}  agree")
    for label, fam, functional, extra in WORKLOADS:
        cfg = mc.SimulationConfig(fam, functional, args.paths, seed=1, **extra)
        tc, rc = best_of(cfg, "compiled", args.repeat)
        tp, rp = best_of(cfg, "python", args.repeat)
        agree = np.allclose(rc.values, rp.values, rtol=1e-12, atol=1e-12)
        print(f"{label:28s} {tc:11.3f} {tp:10.3f} {tp / tc:7.1f}x  {'yes' if agree else 'NO'}")


if __name__ == "__main__":
    main()

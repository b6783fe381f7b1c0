"""Compiled kernels against the pure-Python fallback.

Times fixed-step integrations of the contact oscillator (reduced field and
the induced field of a reversible perturbation) with both backends and
checks that the trajectories agree.

    python benchmarks/bench_kernels.py --steps 5000
"""

import argparse
import time

import numpy as np

from nonholo import catalogue, kernels
from nonholo.integrators import StepperConfig, integrate
from nonholo.reduction import induced_field, reduced_field

S0 = np.array([0.3, -0.2, 1.0, 0.4, 0.0])


def best_of(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=5000)
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not kernels.HAVE_COMPILED:
        raise SystemExit("compiled extension not available; rebuild with `pip install -e . --no-build-isolation`")

    spec = catalogue.preset("contact")
    fields = {
        "reduced": reduced_field(spec),
        "induced(q1_quartic, 1e-2)": induced_field(spec.with_perturbation(catalogue.perturbation("q1_quartic"), 1e-2)),
    }
    T = args.steps * args.h
    print(f"{'field':28s} {'method':18s} {'compiled s':>11s} {'python s':>10s} {'speedup':>8s} {'max diff':>9s}")
    for label, X in fields.items():
        for method in ("rk4", "implicit_midpoint"):
            cfg = StepperConfig(method=method, h=args.h)
            tc, a = best_of(lambda: integrate(X, S0, T, cfg, T, compiled=True), args.repeat)
            tp, b = best_of(lambda: integrate(X, S0, T, cfg, T, compiled=False), 1)
            diff = float(np.max(np.abs(a.states - b.states)))
            print(f"{label:28s} {method:18s} {tc:11.4f} {tp:10.3f} {tp / tc:8.0f} {diff:9.1e}")


if __name__ == "__main__":
    main()

"""Time the compiled RK4 kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--tau 6.283] [--n-max 35] [--repeat 3]

Prints wall time per kernel and backend, the speedup and the maximum
absolute difference between the two results.
"""

import argparse
import time

import numpy as np

from cqdyn._backend import get_kernels
from cqdyn.evolve import substeps, time_grid
from cqdyn.model import OscillatorConfig, coherent_vector, oscillator_system, q_power, qq_initial_state


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tau", type=float, default=2 * np.pi)
    ap.add_argument("--n-max", type=int, default=35)
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    try:
        fast = get_kernels("cython")
    except ImportError:
        raise SystemExit("compiled kernels are not built; run pip install -e . first")
    slow = get_kernels("python")

    cfg = OscillatorConfig(lam=0.01, zeta1=12, zeta2=2, n_max=args.n_max)
    times = time_grid(args.tau, 0.05)
    nsub, hsub = substeps(times, args.step)
    spec = oscillator_system(cfg)
    z0 = qq_initial_state(cfg)
    d2 = cfg.dims[1]
    zc = coherent_vector(cfg.beta, d2)
    e2 = cfg.omega2 * (np.arange(d2) + 0.5)
    v = q_power(d2, cfg.nu).astype(complex)
    a0, b0 = complex(cfg.alpha), complex(cfg.beta)

    cases = {
        "rk4_qq": lambda k: k.rk4_qq(z0, spec.e1, spec.e2, spec.v1, spec.v2, cfg.lam, nsub, hsub),
        "rk4_cq": lambda k: k.rk4_cq(a0, zc, 0.0, cfg.omega1, e2, v, cfg.lam, cfg.nu, True, nsub, hsub)[1],
        "rk4_cc": lambda k: k.rk4_cc(a0, b0, cfg.omega1, cfg.omega2, cfg.lam, cfg.nu, nsub, hsub)[0],
    }
    print(f"tau={args.tau:g} step={args.step:g} n_max={args.n_max} substeps={int(nsub.sum())}")
    print(f"{'kernel':8s} {'cython [s]':>11s} {'python [s]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases.items():
        tf, rf = best_of(lambda: fn(fast), args.repeat)
        ts, rs = best_of(lambda: fn(slow), args.repeat)
        diff = float(np.max(np.abs(np.asarray(rf) - np.asarray(rs))))
        print(f"{name:8s} {tf:11.4f} {ts:11.4f} {ts / tf:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Benchmark the compiled occupancy kernel against the pure-Python
fallback and verify draw-for-draw parity on the shared RNG stream.

Run:  python benchmarks/bench_kernels.py [--symbols N]
"""

import argparse
import time

import numpy as np

from oectlink._kernels import _occupancy_py
from oectlink.config import Scheme, baseline_scenario
from oectlink.engine import SymbolEngine


def build_case(n_symbols: int):
    scn = baseline_scenario()
    engine = SymbolEngine(scn, Scheme.HYBRID, 1.4e4, r=45e-6, ctrl=True,
                          isi=False)
    from oectlink.config import Species
    curve = engine.curves[Species.DA]
    kon_dt, _, p_off, n_apt = engine.kin[Species.DA]
    rng = np.random.default_rng(0)
    counts = rng.choice([9333.0, 18667.0, 0.0], size=n_symbols)
    return curve, counts, engine.n_steps, engine.w_steps, kon_dt, p_off, \
        n_apt


def run(impl, args, seed=123):
    rng = np.random.Generator(np.random.Philox(seed))
    start = time.perf_counter()
    sums = impl.occupancy_window_sums(*args[:2], *args[2:], rng)
    return sums, time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--symbols", type=int, default=2000)
    parser.add_argument("--python-symbols", type=int, default=50,
                        help="fallback sample size (it is ~50x slower)")
    opts = parser.parse_args()

    try:
        from oectlink._kernels import _occupancy_cy
    except ImportError:
        print("compiled kernel not available; nothing to compare")
        return

    case = build_case(opts.symbols)
    sums_cy, t_cy = run(_occupancy_cy, case)
    steps = opts.symbols * case[2]
    print(f"cython : {opts.symbols} symbols ({steps:.3g} steps) "
          f"in {t_cy:.3f} s  ({steps / t_cy:.3g} steps/s)")

    small = (case[0], case[1][:opts.python_symbols], *case[2:])
    sums_py, t_py = run(_occupancy_py, small)
    steps_py = opts.python_symbols * case[2]
    print(f"python : {opts.python_symbols} symbols ({steps_py:.3g} steps) "
          f"in {t_py:.3f} s  ({steps_py / t_py:.3g} steps/s)")
    print(f"speedup: {(steps / t_cy) / (steps_py / t_py):.1f}x")

    sums_cy_small, _ = run(_occupancy_cy, small)
    parity = np.array_equal(sums_cy_small, sums_py)
    print(f"parity : {'identical draws' if parity else 'MISMATCH'}")
    if not parity:
        raise SystemExit(1)


if __name__ == "__main__":
    main()

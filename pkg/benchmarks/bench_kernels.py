"""Timeline-kernel benchmark: compiled vs pure-Python path.

The chain sweep dominates solver runtime (one call per candidate scheme).
This script times both implementations on the bundled instances and on a
full optimizer run.

    python benchmarks/bench_kernels.py [--samples N]

The compiled path requires numba; PFSM_NO_NUMBA=1 would hide it, so run
this script without that flag.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from pfsm import _kernels
from pfsm.economics import seats_per_run
from pfsm.model import load_instance_path
from pfsm.solution import Solution
from pfsm.solver import SolverConfig, decode, optimize, search_bounds

DATA = Path(__file__).resolve().parents[1] / "src" / "pfsm" / "data"


def sweep_args(inst, sol):
    arrs = inst.arrays(True)
    seats = seats_per_run(inst, sol)
    return (arrs.chain_ptr, arrs.chain_runs, arrs.path_len, arrs.anchor_pos,
            arrs.anchor_time, arrs.seg_time, arrs.freight_on, arrs.freight_off,
            arrs.freight_allowed, arrs.rec_start, arrs.rec_end, arrs.rec_dest,
            arrs.rec_count, seats, inst.dwell.per_passenger_s,
            inst.dwell.per_parcel_s, arrs.window_cap)


def time_fn(fn, args, n):
    fn(*args)  # warm up (JIT compile / cache load)
    t0 = time.perf_counter()
    for _ in range(n):
        fn(*args)
    return (time.perf_counter() - t0) / n


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=2000)
    args = ap.parse_args()

    if not _kernels.USE_NUMBA:
        print("note: numba unavailable or disabled; both rows below run the "
              "pure-Python kernel")

    rng = np.random.default_rng(0)
    print(f"{'instance':<10} {'python us':>12} {'compiled us':>12} {'speedup':>9}")
    for name in ("yushe", "simnet"):
        inst = load_instance_path(DATA / f"{name}.json")
        lb, ub = search_bounds(inst)
        sol = decode(rng.uniform(lb, ub), inst)
        a = sweep_args(inst, sol)
        t_py = time_fn(_kernels._chain_sweep_py, a, max(args.samples // 20, 50))
        t_jit = time_fn(_kernels.chain_sweep, a, args.samples)
        print(f"{name:<10} {t_py * 1e6:>12.1f} {t_jit * 1e6:>12.1f} "
              f"{t_py / t_jit:>8.1f}x")

    inst = load_instance_path(DATA / "yushe.json")
    cfg = SolverConfig(algorithm="ijs", n_pop=40, max_iter=40, seed=1)
    optimize(inst, SolverConfig(algorithm="ijs", n_pop=10, max_iter=3, seed=0))
    t0 = time.perf_counter()
    res = optimize(inst, cfg)
    dt = time.perf_counter() - t0
    print(f"\noptimizer (pop 40 x 40 iters): {dt:.2f} s total, "
          f"{dt / res.total_evaluations * 1e6:.0f} us per evaluation "
          f"({'compiled' if _kernels.USE_NUMBA else 'python'} kernel)")


if __name__ == "__main__":
    main()

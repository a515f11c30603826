"""Empirical DoF slope of the smallest X instance over a power sweep.

Prints one row per power and the least-squares slope over the reliable
rows next to the finite-instance nominal value.

    python3 scripts/dof_slope_experiment.py --eps 0.45 --p-min 1e12 --p-max 1e18
"""
import argparse
import time

import numpy as np

from cia_sim import sim
from cia_sim.errors import InsufficientDataError


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.45)
    ap.add_argument("--p-min", type=float, default=1e12)
    ap.add_argument("--p-max", type=float, default=1e18)
    ap.add_argument("--points", type=int, default=7)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--T", type=int, default=10_000)
    ap.add_argument("--cap", type=int, default=12_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    inst = sim.XScheme(M=2, K=2, J=(1, 1), n_list=(1, 1), eps=args.eps)
    grid = tuple(np.geomspace(args.p_min, args.p_max, args.points))
    cfg = sim.SweepConfig(inst, grid, trials_per_P=args.trials, symbols_per_trial=args.T,
                          seed=args.seed, point_cap=args.cap)
    t0 = time.perf_counter()
    rep = sim.run_sweep(cfg, threads=args.threads)
    print(f"{'P':>10} {'x':>8} {'Q':>3} {'dmin':>10} {'ser':>9} {'bits_ok':>8}")
    for r in rep.rows:
        print(f"{r.P:10.3g} {r.x:8.3f} {r.Q:3d} {r.d_min:10.4g} {r.ser:9.3g} {r.bits_ok:8.4f}")
    nominal = float(inst.nominal_dof())
    try:
        fit = sim.estimate_dof(rep.rows)
        print(f"fitted slope {fit:.4f}  nominal {nominal:.4f}  rel.err {abs(fit / nominal - 1):.3f}")
    except InsufficientDataError as exc:
        print(f"no fit: {exc}; nominal {nominal:.4f}")
    x = np.array([r.x for r in rep.rows])
    y = np.array([r.bits_ok for r in rep.rows])
    print(f"slope over all rows {np.polyfit(x, y, 1)[0]:.4f}")
    print(f"elapsed {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()

"""Median minimum distance of the smallest X constellation against power.

At a pinned ``Q`` the enumerated constellation only rescales with ``lambda``,
so the median grows as ``sqrt(P)``; with ``Q`` following power the growth is
slower and the printed log-log slope shows by how much.

    python3 scripts/dmin_scaling.py --seeds 50
"""
import argparse

import numpy as np

from cia_sim import codec
from cia_sim.channel import CompoundChannelConfig, sample_channel
from cia_sim.constellation import min_distance


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--q-fixed", type=int, default=None)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--cap", type=int, default=5_000_000)
    args = ap.parse_args()
    powers = 10.0 ** np.arange(2, 10)
    med = []
    for P in powers:
        d, Q = [], None
        for seed in range(args.seeds):
            ch = sample_channel(CompoundChannelConfig(M=2, K=2, J=(1, 1), seed=seed))
            bases = codec.build_bases(ch.config.dims, (1, 1))
            p = codec.make_params(ch, P=P, n_list=(1, 1), eps=args.eps, q_fixed=args.q_fixed,
                                  bases=bases, strict=False)
            Q = p.Q
            c = codec.build_received_constellation(ch, 0, 0, bases, p, cap=args.cap)
            d.append(min_distance(c))
        med.append(float(np.median(d)))
        print(f"P={P:8.1e}  Q={Q}  median dmin={med[-1]:.4g}")
    slope = np.polyfit(np.log10(powers), np.log10(med), 1)[0]
    print(f"log10 dmin vs log10 P slope {slope:.3f}")


if __name__ == "__main__":
    main()

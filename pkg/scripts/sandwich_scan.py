#!/usr/bin/env python3
"""Compare k_t with the b^s_{t,t} and b^s_{t,inf} sequence norms across resolutions.

Two families: random vectors, and a flat weak-type profile filling the finest
level.  The upper ratio k_t / b^s_{t,t} never exceeds one; the lower ratio
b^s_{t,inf} / k_t stays flat for random vectors and grows like H_N^{1/t}
(N = 2^J, H_N the harmonic number) for the flat profile.
"""
import argparse

import numpy as np

from l1rates.besov import WaveletGrid, besov_seq_norm, t_s_scale
from l1rates.seqspace import kt_norm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, default=1.0)
    ap.add_argument("--J", type=int, nargs="+", default=[6, 8, 10, 12, 14])
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    s = args.s
    t = t_s_scale(s, 1.0, 0.0)
    rng = np.random.default_rng(args.seed)
    print(f"# s={s}, t={t:.4f}")
    print("J,random_upper_max,random_lower_max,flat_lower,harmonic_pow")
    for J in args.J:
        g = WaveletGrid(J)
        ws = g.weight_system(1.0, 0.0)
        upper, lower = [], []
        for _ in range(args.trials):
            x = rng.standard_normal(g.n) * 2.0 ** (-g.levels * rng.uniform(0, 3))
            k = kt_norm(x, ws, t)
            upper.append(k / besov_seq_norm(x, g, s, t, t))
            lower.append(besov_seq_norm(x, g, s, t, np.inf) / k)
        x = np.zeros(g.n)
        idx = np.arange(2**J, 2 ** (J + 1))
        x[idx] = np.arange(1, 2**J + 1) ** (-1 / t) * ws.r[idx] / ws.a[idx] ** 2
        flat = besov_seq_norm(x, g, s, t, np.inf) / kt_norm(x, ws, t)
        h = np.sum(1.0 / np.arange(1, 2**J + 1)) ** (1 / t)
        print(f"{J},{max(upper):.6f},{max(lower):.4f},{flat:.4f},{h:.4f}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Locate the smoothness s at which the finest-level Besov term of a jump signal stops decaying.

For each t the threshold is found by bisection on the sign of the level-growth
slope over J = 6..12, and printed next to the candidates 1/t and 1 + 1/t.
"""
import argparse

from l1rates.besov import membership_threshold, piecewise_smooth_signal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, nargs="+", default=[0.5, 0.8, 1.0, 1.5])
    ap.add_argument("--jmin", type=int, default=6)
    ap.add_argument("--jmax", type=int, default=12)
    args = ap.parse_args()

    def signal(R):
        return piecewise_smooth_signal("jump", [1 / 3, 0.71], R)

    print("t,threshold,inv_t,one_plus_inv_t")
    for t in args.t:
        s = membership_threshold(signal, t, range(args.jmin, args.jmax + 1))
        print(f"{t},{s:.4f},{1 / t:.4f},{1 + 1 / t:.4f}")


if __name__ == "__main__":
    main()

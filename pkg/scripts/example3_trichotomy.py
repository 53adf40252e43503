"""Cobb-Douglas pure-bubble economy: classify initial fiat prices around b_bar."""

import argparse

import numpy as np

from olgbubbles import cobb_douglas_bubble_path, critical_bubble


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.3)
    ap.add_argument("--A", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=0.9)
    ap.add_argument("--k0", type=float, default=1.0)
    ap.add_argument("--horizon", type=int, default=500)
    args = ap.parse_args()

    b_bar = critical_bubble(args.alpha, args.A, args.beta, args.k0)
    print(f"b_bar = {b_bar!r}")
    print(f"{'p0/b_bar':>9} {'classification':>30} {'K_T':>22} {'p_T':>12} {'fail_t':>7}")
    for frac in np.linspace(0.0, 1.25, 11).tolist():
        res = cobb_douglas_bubble_path(args.alpha, args.A, args.beta, args.k0, frac * b_bar, args.horizon)
        path = res.path
        K_T = path.K[path.T] if path is not None else float("nan")
        p_T = path.p[-1] if path is not None else float("nan")
        print(f"{frac:9.3f} {res.classification:>30} {K_T:22.17g} {p_T:12.3e} {str(res.first_failure_t):>7}")
    sv = res.special_values
    print(f"gamma = {sv['gamma']!r}, K* = {sv['K_star']!r}, bubbly limit K = {sv['limit_K']!r}")


if __name__ == "__main__":
    main()

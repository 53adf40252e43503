"""Fiat-only economy with endowments 70 (8/7)^t and 35 (8/7)^t: a family of
two-cycle equilibria indexed by the initial fiat price."""

import argparse

from olgbubbles import (
    fiat_continuum_path,
    fiat_stationary_price,
    map_olg_to_two_cycle,
    prices_from_path,
    verify_two_cycle_full,
)
from olgbubbles.scenarios import kocherlakota_sequences


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=int, default=200)
    ap.add_argument("--prices", type=float, nargs="*", default=[0.0, 3.5, 7.0, 10.5, 14.0])
    args = ap.parse_args()

    sigma, beta = 2.0, 7.0 / 8.0
    y, o = kocherlakota_sequences()
    sp = fiat_stationary_price(70.0, 35.0, 8.0 / 7.0, sigma, beta)
    print(f"stationary price p = {sp.p!r}")
    print(f"{'p0':>6} {'p_T / e^y_T':>14} {'verdict':>28} {'tvc slope':>10}")
    for p0 in args.prices:
        path = fiat_continuum_path(y, o, sigma, beta, p0, args.horizon)
        rep = verify_two_cycle_full(path.params, map_olg_to_two_cycle(path.params, path), prices_from_path(path))
        share = path.p[-1] / y(args.horizon)
        print(f"{p0:6.2f} {share:14.6e} {str(rep.verdict):>28} {rep.tvc_even.slope:10.5f}")


if __name__ == "__main__":
    main()

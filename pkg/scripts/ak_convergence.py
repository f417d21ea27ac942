"""Grid refinement against the AK/log closed form V(k) = log(rho k)/rho + (gamma - rho)/rho^2."""

import argparse

import numpy as np

from hjbgrowth import model
from hjbgrowth.hjb import GridSpec, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rho", type=float, default=0.05)
    ap.add_argument("--gamma", type=float, default=0.04)
    ap.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000, 2000, 4000])
    args = ap.parse_args()
    m = model.ak(args.gamma, args.rho)
    prev = None
    print(f"{'n':>6} {'max rel err [1,9]':>18} {'ratio':>7} {'middle 80%':>12} {'iters':>6}")
    for n in args.sizes:
        V = solve(m, GridSpec(0.1, 10.0, n, "log"))
        exact = np.log(args.rho * V.nodes) / args.rho + (args.gamma - args.rho) / args.rho**2
        rel = np.abs(V.values - exact) / np.abs(exact)
        inner = rel[(V.nodes >= 1.0) & (V.nodes <= 9.0)].max()
        mid = rel[int(0.1 * n): int(0.9 * n)].max()
        ratio = "" if prev is None else f"{prev / inner:7.2f}"
        print(f"{n:6d} {inner:18.3e} {ratio:>7} {mid:12.3e} {V.metadata['iterations']:6d}")
        prev = inner


if __name__ == "__main__":
    main()

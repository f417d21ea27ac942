"""Optimal RCK paths from several starts, with Bellman defects and the steady-state gap."""

import argparse

from hjbgrowth import model
from hjbgrowth.hjb import GridSpec, solve
from hjbgrowth.trajectory import bellman_defects, synthesize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.3)
    ap.add_argument("--d", type=float, default=0.05)
    ap.add_argument("--rho", type=float, default=0.05)
    ap.add_argument("--k-bar", type=float, nargs="+", default=[0.5, 1.0, 10.0, 15.0])
    ap.add_argument("--T", type=float, default=400.0)
    ap.add_argument("--csv", default=None, help="write the first trajectory to this path")
    args = ap.parse_args()
    m = model.rck(alpha=args.alpha, d=args.d, rho=args.rho)
    k_ss = m.steady_state()
    V = solve(m, GridSpec(0.1, 20.0, 1000))
    print(f"k_ss = {k_ss:.6f}")
    for i, kb in enumerate(args.k_bar):
        tr = synthesize(V, m, kb, T=args.T)
        d = bellman_defects(tr, V, m, [1.0, 10.0, 100.0])
        print(f"k_bar={kb:6.3g}  k(T)={tr.k[-1]:.6f}  gap={abs(tr.k[-1] - k_ss) / k_ss:.2e}  "
              f"defects(1,10,100)={d[0]:.1e},{d[1]:.1e},{d[2]:.1e}  grade={tr.grade}")
        if args.csv and i == 0:
            tr.to_csv(args.csv)


if __name__ == "__main__":
    main()

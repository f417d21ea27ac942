"""Slope gaps of the threshold-tax model with and without depreciation.

With d = 0 the one-sided slope gap shrinks with the mesh; with d > 0 the
report at the pinned node f(k*) - d k* = A f(k*) shows whether the solution
sticks at k*.
"""

import argparse

import numpy as np

from hjbgrowth import model
from hjbgrowth.hjb import GridSpec, kink_report, differentiability_scan, solve, viscosity_certify


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000, 2000])
    args = ap.parse_args()
    m0 = model.fiscal(alpha=0.3, d=0.0, A=0.9, B=0.5, name="fiscal_d0")
    md = model.fiscal(alpha=0.3, d=0.05, A=0.9, B=0.5, name="fiscal_d")
    k_star = model.fiscal_kink_capital(md)
    print(f"kink capital k* = {k_star:.10g}")
    print(f"{'n':>6} {'d=0 max gap':>12} {'d>0 gap at k*':>14} {'excess at k*':>13} {'flag':>5} {'sticky':>6} {'residual':>10}")
    for n in args.sizes:
        V0 = solve(m0, GridSpec(0.2, 40.0, n))
        inner = slice(1, V0.n - 1)
        gap0 = np.max((V0.slope_minus[inner] - V0.slope_plus[inner]) / np.abs(V0.slope_minus[inner]))
        Vd = solve(md, GridSpec(0.1, 20.0, n, pinned=(k_star,)))
        rep = kink_report(Vd, md, k_star)
        res = viscosity_certify(Vd, md).max_relative
        print(f"{n:6d} {gap0:12.3e} {rep['relative_gap']:14.3e} {rep['gap_excess']:13.3e} {str(rep['kink_flag']):>5} "
              f"{str(rep['sticky']):>6} {res:10.2e}")
    for c in differentiability_scan(Vd, md):
        print(f"scan (d>0, n={Vd.n}): k={c.k:.6g} {c.classification}, "
              f"relative gap {c.relative_gap:.3e} -> {c.refined_relative_gap:.3e} on the doubled grid")


if __name__ == "__main__":
    main()

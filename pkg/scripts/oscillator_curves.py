"""Squeezed-oscillator entropy curves (Gaussian fast path) for several squeezings and temperatures.

    python scripts/oscillator_curves.py [out.csv] [--deltas 1e-3 1e-4] [--temps 0 10]
"""
import argparse
import csv

import numpy as np

from pagecurve.davies import BathSpec, thermal_rate
from pagecurve.gaussian import CovarianceState, covariance_trajectory
from pagecurve.integrator import fmt
from pagecurve.thermo import WindowTooShortError, page_summary


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", nargs="?", default="oscillator_entropy.csv")
    ap.add_argument("--deltas", type=float, nargs="+", default=[1e-3, 1e-4])
    ap.add_argument("--temps", type=float, nargs="+", default=[0.0, 10.0])
    ap.add_argument("--gamma", type=float, default=0.01)
    ap.add_argument("--samples", type=int, default=2001)
    args = ap.parse_args()

    times = np.linspace(0, 20 / args.gamma, args.samples)
    cols, names = [times * args.gamma], ["gamma_t"]
    for T in args.temps:
        bath = BathSpec(T, args.gamma)
        gd, gu = thermal_rate(1.0, bath), thermal_rate(-1.0, bath)
        for delta in args.deltas:
            traj = covariance_trajectory(CovarianceState.squeezed_vacuum(delta), 1.0, gd, gu, times)
            _, S, E = traj.columns()
            cols.append(S)
            names.append(f"S_T{T:g}_delta{delta:g}")
            try:
                p = page_summary(times, S, E)
                peak = f"t* = {p.t_star:.3f}, S* = {p.S_star:.4f}"
            except WindowTooShortError:
                peak = "no interior maximum"
            print(f"T = {T:g}, delta = {delta:g}: {peak}, final S = {S[-1]:.4g}")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()

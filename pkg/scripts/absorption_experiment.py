"""Two-boundary regime: absorption split and martingale check by simulation.

For a weight with p(0) = 1 and q(1) = 1 the chain is absorbed at 0 or 1.
The probability of ending near 1 from x0 should match the harmonic
function h(x0); E[h(Z_n)] should stay at h(x0).
"""
import argparse

import numpy as np

from ifslab import absorption_split, martingale_check, parse_weight, solve_harmonic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--weight", default="1-x")
    ap.add_argument("--chains", type=int, default=20_000)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    w = parse_weight(args.weight)
    h = solve_harmonic(w, 2000)
    print(f"weight {w.label}: p(0)={w.p0:g}, q(1)={w.q1:g}")
    print(f"{'x0':>6}  {'h(x0)':>8}  {'near 1':>8}  {'stderr':>8}  {'undecided':>9}")
    for x0 in np.linspace(0.1, 0.9, 9):
        s = absorption_split(w, x0, args.chains, args.steps, 1e-6, seed=args.seed)
        hx = float(h(np.array([x0]))[0])
        se = np.sqrt(max(s.near_1 * (1 - s.near_1), 1e-12) / args.chains)
        print(f"{x0:6.2f}  {hx:8.4f}  {s.near_1:8.4f}  {se:8.4f}  {s.undecided:9.1e}")

    x0 = 0.3
    hx = float(h(np.array([x0]))[0])
    print(f"\nE[h(Z_n)] from x0={x0} (target {hx:.4f})")
    for p in martingale_check(w, lambda x: h(np.asarray(x)), x0, (1, 10, 100), args.chains, args.seed):
        print(f"  n={p.n:>4}: {p.mean:.4f} +- {p.stderr:.4f}")


if __name__ == "__main__":
    main()

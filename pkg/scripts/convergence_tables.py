"""Refinement tables for the deterministic solvers.

Prints, for a few weights:
  * sup residual |Q* f - f| on [1e-3, 1 - 1e-3] against grid size N,
  * l1 error of the Ulam stationary vector against exact cell masses,
  * lambda2 of the Ulam matrix against the number of cells.
Observed orders are log2 of successive error ratios.
"""
import argparse
import warnings

import numpy as np

from ifslab import WeightFunction, apply_Q_adjoint, build_ulam, closed_form_density, power_iteration
from ifslab.dfchain import InvariantDensity
from ifslab.spectral import SpectralWarning, cell_masses, estimate_spectrum

WEIGHTS = {
    "const:0.5": WeightFunction.constant(0.5),
    "const:0.3": WeightFunction.constant(0.3),
    "poly:0.2,0.6": WeightFunction.polynomial((0.2, 0.6)),
    "poly:0,0.5,0.5": WeightFunction.polynomial((0.0, 0.5, 0.5)),
}


def orders(errs):
    errs = np.asarray(errs)
    return [""] + [f"{np.log2(a / b):.2f}" for a, b in zip(errs[:-1], errs[1:])]


def table(title, sizes, errs):
    print(f"\n{title}")
    print(f"{'n':>8}  {'error':>12}  order")
    for n, e, o in zip(sizes, errs, orders(errs)):
        print(f"{n:>8}  {e:12.4e}  {o}")


def residual_table(name, w, sizes):
    errs = []
    for n in sizes:
        f = closed_form_density(w, n)
        errs.append((apply_Q_adjoint(w, f) - f).sup(1e-3, 1 - 1e-3))
    table(f"[{name}] stationarity residual vs grid size", sizes, errs)


def ulam_table(name, w, sizes):
    dens = InvariantDensity(w)
    errs = [np.abs(power_iteration(build_ulam(w, n)) - cell_masses(dens, n)).sum() for n in sizes]
    table(f"[{name}] Ulam l1 error vs cells (p(0)={w.p0:g}, q(1)={w.q1:g})", sizes, errs)


def lambda_table(name, w, sizes):
    print(f"\n[{name}] lambda2 vs cells")
    for n in sizes:
        with warnings.catch_warnings():
            # the fallback is reported in est.flags
            warnings.simplefilter("ignore", SpectralWarning)
            est = estimate_spectrum(w, n)
        note = f"  ({'; '.join(est.flags)})" if est.flags else ""
        print(f"{n:>8}  {est.lambda2:.6f}{note}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller sizes")
    args = ap.parse_args()
    grids = [250, 500, 1000, 2000] if args.quick else [500, 1000, 2000, 4000, 8000]
    cells = [50, 100, 200] if args.quick else [100, 200, 400, 800, 1600]
    for name, w in WEIGHTS.items():
        residual_table(name, w, grids)
        ulam_table(name, w, cells)
        lambda_table(name, w, cells[:3])


if __name__ == "__main__":
    main()

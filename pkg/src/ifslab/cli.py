"""Command line: ``ifslab <command> [flags]``.

Commands write plot-ready CSV/JSON into ``--out`` and echo the JSON summary
on stdout. Floats are written with 17 significant digits, so reruns with the
same seed give byte-identical files. Exit codes: 0 ok, 1 config error,
2 regime mismatch.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import dfchain, mc, spectral
from .config import ConfigError, ExperimentConfig, load_config
from .dfchain import RegimeError
from .ifs import verify_hypotheses
from .weights import WeightError, parse_weight

EXIT_OK, EXIT_CONFIG, EXIT_REGIME = 0, 1, 2
INTERIOR = (1e-3, 1.0 - 1e-3)
RESIDUAL_TOL = 1e-3


# -- output ------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "%.17g" % v if math.isfinite(v) else "null"
    if v is None:
        return "null"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, dict):
        return "{" + ", ".join(f"{_fmt(str(k))}: {_fmt(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def dumps(obj) -> str:
    """JSON with floats fixed to 17 significant digits (non-finite -> null)."""
    return _fmt(obj) + "\n"


def write_json(path: Path, obj) -> str:
    text = dumps(obj)
    path.write_text(text)
    return text


def write_csv(path: Path, header: str, columns, formats) -> None:
    rows = zip(*columns)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f % v for f, v in zip(formats, row)) + "\n")


# -- commands ----------------------------------------------------------------

def _weight(cfg: ExperimentConfig, default: str = "const:0.5"):
    return parse_weight(cfg.weight or default, alpha=cfg.alpha)


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_stationary(path: Path, M: spectral.UlamMatrix, pi: np.ndarray) -> None:
    e = M.edges
    write_csv(path, "cell,left,right,mass", (np.arange(M.n_cells), e[:-1], e[1:], pi),
              ("%d", "%.17g", "%.17g", "%.17g"))


def cmd_density(cfg: ExperimentConfig) -> dict:
    w = _weight(cfg)
    case = dfchain.case_of(w.p0, w.q1)
    if case != "AC_UNIQUE":
        raise RegimeError(
            f"regime {case}: p(0)={w.p0:.17g}, q(1)={w.q1:.17g}; the candidate density "
            "x^-p(0) (1-x)^-q(1) exp(r) is not integrable, so there is no invariant density")
    out = _outdir(cfg)
    f = dfchain.closed_form_density(w, cfg.grid_size)
    write_csv(out / "density.csv", "x,f", (f.x, f.values), ("%.17g", "%.17g"))
    M = spectral.build_ulam(w, cfg.n_cells)
    pi = spectral.power_iteration(M)
    _write_stationary(out / "ulam_stationary.csv", M, pi)
    res = (dfchain.apply_Q_adjoint(w, f) - f)
    sup = res.sup(*INTERIOR)
    report = {
        "weight": w.label, "grid_size": cfg.grid_size, "interior": list(INTERIOR),
        "sup_residual": sup, "tolerance": RESIDUAL_TOL, "ok": sup < RESIDUAL_TOL,
        "density_file": "density.csv", "stationary_file": "ulam_stationary.csv",
    }
    write_json(out / "residual.json", report)
    return report


def cmd_classify(cfg: ExperimentConfig) -> dict:
    w = _weight(cfg)
    rep = dfchain.classify_regime(w, grid_size=cfg.grid_size)
    out = _outdir(cfg)
    report = {"weight": w.label, "p0": rep.p0, "q1": rep.q1, "case": rep.case_id,
              "invariant": rep.invariant, "near_threshold": rep.near_threshold,
              "notes": list(rep.notes)}
    if rep.density is not None:
        write_csv(out / "density.csv", "x,f", (rep.density.x, rep.density.values), ("%.17g", "%.17g"))
        report["density_file"] = "density.csv"
    if rep.h is not None:
        write_csv(out / "harmonic.csv", "x,h", (rep.h.x, rep.h.values), ("%.17g", "%.17g"))
        report["h_file"] = "harmonic.csv"
    write_json(out / "classify.json", report)
    return report


def cmd_verify(cfg: ExperimentConfig) -> dict:
    w = _weight(cfg)
    report = {"weight": w.label, **verify_hypotheses(w, cfg.alpha).as_dict()}
    write_json(_outdir(cfg) / "verify.json", report)
    return report


def cmd_spectrum(cfg: ExperimentConfig, dump_matrix: bool = False) -> dict:
    w = _weight(cfg)
    out = _outdir(cfg)
    est = spectral.estimate_spectrum(w, cfg.n_cells)
    M = spectral.build_ulam(w, cfg.n_cells)
    _write_stationary(out / "ulam_stationary.csv", M, est.stationary)
    report = {"weight": w.label, "n_cells": est.n_cells, "lambda2": est.lambda2,
              "decay_fit": est.decay_fit, "case": est.case_id,
              "lambda2_two_sided": est.lambda2_two_sided, "flags": list(est.flags),
              "stationary_file": "ulam_stationary.csv"}
    if dump_matrix:
        i, j, prob = M.nonzero()
        write_csv(out / "ulam.csv", "i,j,prob", (i, j, prob), ("%d", "%d", "%.17g"))
        report["matrix_file"] = "ulam.csv"
    write_json(out / "spectrum.json", report)
    return report


def _reference_cdf(w):
    """Regime-predicted CDF, or None when the limit law depends on the start."""
    case = dfchain.case_of(w.p0, w.q1)
    if case == "AC_UNIQUE":
        return dfchain.InvariantDensity(w).cdf
    if case == "DIRAC_0":
        return lambda x: np.ones_like(np.asarray(x, dtype=float))
    if case == "DIRAC_1":
        return lambda x: (np.asarray(x) >= 1.0).astype(float)
    return None


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    if cfg.burn_in >= cfg.n_steps:
        raise ConfigError(f"simulate needs burn_in < n_steps (got {cfg.burn_in}, {cfg.n_steps})")
    w = _weight(cfg)
    out = _outdir(cfg)
    emp = mc.run_chains(w, cfg.x0, cfg.n_steps, cfg.n_chains, cfg.burn_in, cfg.seed,
                        threads=cfg.threads)
    e = emp.edges
    write_csv(out / "empirical.csv", "bin_left,bin_right,count", (e[:-1], e[1:], emp.counts),
              ("%.17g", "%.17g", "%d"))
    traj = mc.simulate_trajectory(w, cfg.x0, cfg.n_steps, cfg.seed)
    write_csv(out / "trajectory.csv", "n,z", (np.arange(traj.states.size), traj.states),
              ("%d", "%.17g"))
    report = {"weight": w.label, "seed": cfg.seed, "x0": cfg.x0, "n_chains": cfg.n_chains,
              "n_steps": cfg.n_steps, "burn_in": cfg.burn_in, "n_samples": emp.total,
              "rng": mc.RNG_NAME, "empirical_file": "empirical.csv",
              "trajectory_file": "trajectory.csv"}
    cdf = _reference_cdf(w)
    if cdf is None:
        report.update(ks=None, note="BOUNDARY_MIX: the limit law depends on x0; no KS reference")
    else:
        ess = (mc.effective_sample_size(emp.samples) if emp.samples is not None
               else mc.EffectiveSize(emp.total, float(cfg.n_steps - cfg.burn_in), cfg.n_chains,
                                     "one sample per chain (raw samples not retained)"))
        ks = mc.ks_distance(emp, cdf)
        crit = mc.ks_critical(ess.n_eff)
        report.update(ks=ks, ks_method="raw samples" if emp.samples is not None else "bin edges",
                      n_eff=ess.n_eff, tau=ess.tau, n_eff_method=ess.method,
                      critical_1pct=crit, passed=ks < crit)
    write_json(out / "ks.json", report)
    return report


def cmd_drift(cfg: ExperimentConfig) -> dict:
    w = _weight(cfg, default="1-x")
    out = _outdir(cfg)
    rep = dfchain.drift_decay(w, cfg.x0, cfg.n_steps, cfg.n_chains, cfg.seed, cfg.threads)
    write_csv(out / "drift.csv", "n,mean_delta,stderr", (rep.n, rep.mean_delta, rep.stderr),
              ("%d", "%.17g", "%.17g"))
    report = {"weight": w.label, "x0": cfg.x0, "n_chains": cfg.n_chains, "seed": cfg.seed,
              "fitted_rate": rep.fitted_rate, "fit_steps": [int(n) for n in rep.fit_steps],
              "envelope_rate": rep.theoretical_rate, "drift_file": "drift.csv"}
    write_json(out / "rate.json", report)
    return report


COMMANDS = {
    "density": cmd_density,
    "classify": cmd_classify,
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "drift": cmd_drift,
}


# -- parsing -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--weight", help="const:c | x | 1-x | poly:c0,c1,... | pwl:file.csv")
    common.add_argument("--alpha", type=float)
    common.add_argument("--grid", dest="grid_size", type=int)
    common.add_argument("--cells", dest="n_cells", type=int)
    common.add_argument("--chains", dest="n_chains", type=int)
    common.add_argument("--steps", dest="n_steps", type=int)
    common.add_argument("--burn-in", dest="burn_in", type=int)
    common.add_argument("--seed", type=int, help="falls back to $IFSLAB_SEED, then 0")
    common.add_argument("--out")
    common.add_argument("--threads", type=int)
    common.add_argument("--x0", type=float)
    common.add_argument("--config", help="flat key=value file; flags override it")

    parser = _Parser(prog="ifslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "spectrum":
            sp.add_argument("--dump-matrix", action="store_true", help="also write ulam.csv (i,j,prob)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    keys = ("weight", "alpha", "grid_size", "n_cells", "n_chains", "n_steps", "burn_in",
            "seed", "out", "threads", "x0")
    try:
        cfg = load_config(args.config, **{k: getattr(args, k) for k in keys})
        extra = {"dump_matrix": args.dump_matrix} if args.command == "spectrum" else {}
        report = COMMANDS[args.command](cfg, **extra)
    except (ConfigError, WeightError) as exc:
        print(f"ifslab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as exc:
        print(f"ifslab: regime mismatch: {exc}", file=sys.stderr)
        return EXIT_REGIME
    sys.stdout.write(dumps(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

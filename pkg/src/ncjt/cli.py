"""Command line front end: ``ncjt <command> [--scenario FILE | --preset NAME] ...``.

Every command writes a CSV table (header row first) and a JSON sidecar next to
it with the resolved scenario, seed and package versions. Exit status is 0 on
success, 2 on invalid input and 3 when the derivative order cap is hit.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__, config, csi, mc_sim, scheduling, sinr
from .errors import DerivativeCapError, DomainError, NcjtError
from .gamma_fit import fit_scenario, interference_moments
from .laplace import DEFAULT_CAP
from .scenario import db_to_linear

FORMAT_VERSION = 1
EXIT_OK, EXIT_INVALID, EXIT_CAP = 0, 2, 3


class UsageError(DomainError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def _db_grid(text):
    """``lo:hi:n`` in dB, or a comma separated list of dB values."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return np.linspace(float(lo), float(hi), n)
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; expected lo:hi:n or a list") from None


def _int_range(text):
    """``a:b`` (inclusive) or a comma separated list of integers."""
    try:
        if ":" in text:
            a, b = (int(v) for v in text.split(":"))
            vals = list(range(a, b + 1))
        else:
            vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}")
    return vals


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _resolve(args):
    if args.scenario and args.preset:
        raise UsageError("give either --scenario or --preset, not both")
    if args.scenario:
        return config.load_scenario(args.scenario)
    if args.preset:
        return config.preset_scenario(args.preset)
    raise UsageError("a scenario is required (--scenario FILE or --preset NAME)")


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer, str)):
        return str(v)
    return f"{float(v):.17g}"


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_sidecar(csv_path, command, scenarios, *, seed=None, extra=None):
    doc = {
        "format_version": FORMAT_VERSION,
        "command": command,
        "scenarios": {name: {"file_units": config.scenario_to_mapping(s), "linear": s.to_dict(), "digest": s.digest()} for name, s in scenarios.items()},
        "seed": seed,
        "versions": {"ncjt": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": sys.version.split()[0]},
    }
    doc.update(extra or {})
    path = Path(csv_path).with_suffix(".json")
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_fit_gamma(args):
    scn = _resolve(args)
    mean, var = interference_moments(scn)
    g = fit_scenario(scn)
    write_table(args.out, ["mean", "variance", "shape", "scale"], [[mean, var, g.shape, g.scale]])
    write_sidecar(args.out, "fit-gamma", {"scenario": scn})
    print(f"shape={g.shape:.6g} scale={g.scale:.6g}")


def cmd_cdf(args):
    scn = _resolve(args)
    grid_db = args.beta_grid
    betas = db_to_linear(grid_db)
    if args.tail is not None:
        rows = []
        for b_db, b in zip(grid_db, betas):
            t = sinr.cdf_tail_remainder(scn, b, args.tail, cap=args.cap)
            rows.append([b_db, b, t.value, t.truncation])
        write_table(args.out, ["beta_db", "beta", "tail_remainder", "truncation"], rows)
        write_sidecar(args.out, "cdf", {"scenario": scn}, extra={"mode": "tail", "m_hi": args.tail})
        return
    curve = sinr.cdf_curve(scn, betas, cap=args.cap)
    if args.bounds:
        header = ["beta_db", "beta", "lower", "upper", "gap"]
        rows = zip(grid_db, betas, curve.lower, curve.upper, curve.gap)
    else:
        header = ["beta_db", "beta", "approx"]
        rows = zip(grid_db, betas, curve.approx)
    write_table(args.out, header, rows)
    write_sidecar(args.out, "cdf", {"scenario": scn}, extra={"mode": "bounds" if args.bounds else "approx", "fit": curve.meta})


def cmd_simulate(args):
    scn = _resolve(args)
    samples = mc_sim.run(scn, args.trials, args.seed, args.rsim, workers=args.workers)
    mc_sim.write_csv(samples, args.out)
    write_sidecar(
        args.out,
        "simulate",
        {"scenario": scn},
        seed=args.seed,
        extra={"trials": args.trials, "sim_radius_m": samples.sim_radius, "far_field_compensated": True},
    )


def cmd_compare(args):
    scn = _resolve(args)
    grid_db = args.beta_grid
    betas = db_to_linear(grid_db)
    curve = sinr.cdf_curve(scn, betas, cap=args.cap)
    samples = mc_sim.run(scn, args.trials, args.seed, args.rsim, workers=args.workers)
    emp = mc_sim.empirical_cdf(samples, betas)
    dist = np.abs(curve.approx - emp.approx)
    sup = float(dist.max())
    write_table(
        args.out,
        ["beta_db", "beta", "lower", "approx", "upper", "empirical"],
        zip(grid_db, betas, curve.lower, curve.approx, curve.upper, emp.approx),
    )
    write_sidecar(
        args.out,
        "compare",
        {"scenario": scn},
        seed=args.seed,
        extra={
            "trials": args.trials,
            "sim_radius_m": samples.sim_radius,
            "sup_distance": sup,
            "argmax_beta_db": float(grid_db[int(dist.argmax())]),
            "dkw_99": emp.meta["dkw_99"],
        },
    )
    print(f"sup-distance={sup:.6f} dkw99={emp.meta['dkw_99']:.6f}")


def _avg_se_rows(scn, k_range, pilots):
    cols = [csi.avg_se_vs_K(scn, k_range, None)] + [csi.avg_se_vs_K(scn, k_range, n) for n in pilots]
    header = ["K", "perfect"] + [f"pilots_{n}" for n in pilots]
    return header, [[k, *vals] for k, vals in zip(k_range, zip(*cols))]


def cmd_avg_se(args):
    scn = _resolve(args)
    header, rows = _avg_se_rows(scn, args.k_range, args.n_pilot)
    write_table(args.out, header, rows)
    write_sidecar(args.out, "avg-se", {"scenario": scn}, extra={"k_range": args.k_range, "pilots": args.n_pilot})


def cmd_delta(args):
    scn = _resolve(args)
    rows = [[t, scheduling.delta_saving(scn.fading, scn.alpha, db_to_linear(t))] for t in args.ttilde_grid]
    write_table(args.out, ["ttilde_db", "delta"], rows)
    write_sidecar(args.out, "delta", {"scenario": scn})


# figure presets -------------------------------------------------------------

RATE_GRID = np.linspace(0.0, 10.0, 101)


def _figure_gamma_fit(scenarios, args):
    header = ["label", "x", "gamma_cdf"] + (["empirical"] if args.trials else [])
    rows = []
    from scipy.stats import gamma as gamma_dist

    for name, scn in scenarios.items():
        g = fit_scenario(scn)
        x = gamma_dist.ppf(np.linspace(0.005, 0.995, 81), g.shape, scale=g.scale)
        cols = [gamma_dist.cdf(x, g.shape, scale=g.scale)]
        if args.trials:
            samples = mc_sim.run(scn, args.trials, args.seed, workers=args.workers)
            cols.append(mc_sim.ecdf(samples.denominator, x))
        rows += [[name, xi, *vals] for xi, *vals in zip(x, *cols)]
    return header, rows


def _figure_sinr_cdf(scenarios, args):
    grid_db = sinr.DEFAULT_BETA_DB
    betas = db_to_linear(grid_db)
    header = ["label", "beta_db", "beta", "lower", "approx", "upper"] + (["empirical"] if args.trials else [])
    rows = []
    for name, scn in scenarios.items():
        curve = sinr.cdf_curve(scn, betas, cap=args.cap)
        cols = [curve.lower, curve.approx, curve.upper]
        if args.trials:
            samples = mc_sim.run(scn, args.trials, args.seed, workers=args.workers)
            cols.append(mc_sim.empirical_cdf(samples, betas).approx)
        rows += [[name, d, b, *vals] for d, b, *vals in zip(grid_db, betas, *cols)]
    return header, rows


def _rate_curve(scn, cap):
    return np.array([sinr.rate_cdf(scn, t, cap=cap) for t in RATE_GRID])


def _empirical_rate(scn, args):
    samples = mc_sim.run(scn, args.trials, args.seed, workers=args.workers)
    return mc_sim.ecdf(np.log2(1.0 + samples.sinr), RATE_GRID)


def _figure_rate_cdf(scenarios, args):
    header = ["label", "rate", "approx"] + (["empirical"] if args.trials else [])
    rows = []
    for name, scn in scenarios.items():
        cols = [_rate_curve(scn, args.cap)]
        if args.trials:
            cols.append(_empirical_rate(scn, args))
        rows += [[name, t, *vals] for t, *vals in zip(RATE_GRID, *cols)]
    return header, rows


def _figure_fr_cs(scenarios, args):
    header = ["label", "rate", "fr", "cs", "delta"] + (["empirical_fr"] if args.trials else [])
    rows = []
    for name, scn in scenarios.items():
        delta = scheduling.delta_saving(scn.fading, scn.alpha, scn.edge_threshold)
        cols = [_rate_curve(scn.with_(scheduling="FR"), args.cap), _rate_curve(scn.with_(scheduling="CS"), args.cap)]
        cols.append(np.full(len(RATE_GRID), delta))
        if args.trials:
            cols.append(_empirical_rate(scn, args))
        rows += [[name, t, *vals] for t, *vals in zip(RATE_GRID, *cols)]
    return header, rows


def _figure_avg_se(scenarios, args, preset):
    scn = next(iter(scenarios.values()))
    return _avg_se_rows(scn, preset["k_range"], preset["pilots"])


def cmd_figure(args):
    preset = config.PRESETS.get(args.name)
    if preset is None:
        raise UsageError(f"unknown figure preset: {args.name!r} (known: {', '.join(config.PRESETS)})")
    scenarios = {k: config.scenario_from_mapping(v) for k, v in preset["scenarios"].items()}
    kind = preset["kind"]
    if kind == "avg_se":
        header, rows = _figure_avg_se(scenarios, args, preset)
    else:
        header, rows = {
            "gamma_fit": _figure_gamma_fit,
            "sinr_cdf": _figure_sinr_cdf,
            "rate_cdf": _figure_rate_cdf,
            "fr_cs": _figure_fr_cs,
        }[kind](scenarios, args)
    out = Path(args.out_dir) / f"{args.name}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_table(out, header, rows)
    extra = {"figure": args.name, "kind": kind, "swept": preset["swept"], "trials": args.trials}
    if kind == "avg_se":
        extra.update(k_range=preset["k_range"], pilots=preset["pilots"])
    write_sidecar(out, "figure", scenarios, seed=args.seed if args.trials else None, extra=extra)
    print(out)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="ncjt", description="SINR statistics of non-coherent joint transmission.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(sp, default_out):
        sp.add_argument("--scenario", help="YAML scenario file")
        sp.add_argument("--preset", help="figure preset, optionally NAME/LABEL")
        sp.add_argument("-o", "--out", default=default_out, help="CSV output path (sidecar gets .json)")

    def mc_args(sp, trials):
        sp.add_argument("--trials", type=_nonneg_int, default=trials)
        sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("--rsim", type=float, default=None, help="simulation radius in meters (default 10 D)")
        sp.add_argument("--workers", type=int, default=None, help="process count (capped by NCJT_THREADS)")

    sp = sub.add_parser("fit-gamma", help="Gamma fit of interference plus noise")
    scenario_args(sp, "fit_gamma.csv")
    sp.set_defaults(func=cmd_fit_gamma)

    sp = sub.add_parser("cdf", help="analytic SINR CDF")
    scenario_args(sp, "cdf.csv")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--approx", action="store_true", help="interpolated approximation (default)")
    mode.add_argument("--bounds", action="store_true", help="lower and upper bounds")
    mode.add_argument("--tail", type=_nonneg_int, metavar="M_HI", help="tail remainder summed up to order M_HI - 1")
    sp.add_argument("--beta-grid", type=_db_grid, default=sinr.DEFAULT_BETA_DB, help="dB grid lo:hi:n or list")
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximum derivative order")
    sp.set_defaults(func=cmd_cdf)

    sp = sub.add_parser("simulate", help="Monte Carlo samples")
    scenario_args(sp, "samples.csv")
    mc_args(sp, 100_000)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="analytic approximation against Monte Carlo")
    scenario_args(sp, "compare.csv")
    mc_args(sp, 100_000)
    sp.add_argument("--beta-grid", type=_db_grid, default=np.linspace(-10.0, 20.0, 81))
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("avg-se", help="mean spectral efficiency against the cluster size")
    scenario_args(sp, "avg_se.csv")
    sp.add_argument("--k-range", type=_int_range, default=list(range(1, 11)))
    sp.add_argument("--n-pilot", type=_int_range, default=[100, 200, 400])
    sp.set_defaults(func=cmd_avg_se)

    sp = sub.add_parser("delta", help="resource saving of coordinated scheduling")
    scenario_args(sp, "delta.csv")
    sp.add_argument("--ttilde-grid", type=_db_grid, default=np.linspace(-10.0, 10.0, 41))
    sp.set_defaults(func=cmd_delta)

    sp = sub.add_parser("figure", help="data behind a named figure")
    sp.add_argument("name", help=", ".join(config.PRESETS))
    sp.add_argument("--out-dir", default=".")
    mc_args(sp, 0)
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP)
    sp.set_defaults(func=cmd_figure)
    return p


def run_command(argv):
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except DerivativeCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (NcjtError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main(argv=None):
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())

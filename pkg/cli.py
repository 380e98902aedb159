# cli.py
# Date: 2026-10-19
# Version: 1.0.0

"""
Command-line front end.

    python cli.py sample --n 101 --samples 1000000 --seed 20210101
    python cli.py theta --delta 0.1111111111
    python cli.py compare --samples 200000

Every command writes its primary output plus an experiment record next to
it; `--from-record` replays a record.
"""

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats as sps

import config
from core_count import APParams
from custom_exceptions import KapLabError, ParameterError, SelftestFailure
from experiment_engine import ExperimentConfig, run_mc
from lattice import (
    IntervalFamily,
    a_t,
    build_lattice_model,
    in_L_alpha,
    monotone_radius,
    popcount_distribution,
    predicted_L_probability,
    predicted_pmf,
)
from report_writer import ExperimentRecord, write_csv, write_json, write_record
from selftest import run_selftest
from sigma_cache import load_or_compute
from stats import (
    anticoncentration,
    empirical_oscillation_constant,
    kolmogorov_distance,
    l_alpha_estimates,
    lclt_interval_prediction,
    lclt_scan,
    total_variation,
)
from theta import ThetaEvaluator, extremal_ratio, f_direct, variance_lower_bound
from version import get_version

logger = logging.getLogger(__name__)

DEFAULT_FORMATS = {"sample": "csv", "decompose": "csv", "predict": "csv"}
# Flags that shape how a run executes or where it writes, never what it produces
NON_CONFIG_KEYS = {"out", "from_record", "log_level", "shards", "format"}

def setup_logging(level="INFO", log_file=None):
    """Configures logging to file and stderr."""
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file is not None:
        handlers.insert(0, logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=handlers,
    )
    logging.info(f"--- Starting kAP lab v{get_version()} ---")

class LabArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises ParameterError instead of exiting."""

    def error(self, message):
        raise ParameterError(f"{self.prog}: {message}")

def _alpha_grid(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid alpha grid {text!r}") from e
    if not values:
        raise argparse.ArgumentTypeError("alpha grid is empty")
    return values

def build_parser():
    parser = LabArgumentParser(prog="kap-lab", description="Failure of the local limit law for k-AP counts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {get_version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = LabArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=config.DEFAULT_N)
    common.add_argument("--k", type=int, default=config.DEFAULT_K)
    common.add_argument("--p", type=float, default=config.DEFAULT_P)
    common.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--from-record", type=Path, default=None, dest="from_record")
    common.add_argument("--log-level", default="INFO", dest="log_level")

    mc = LabArgumentParser(add_help=False)
    mc.add_argument("--samples", type=int, default=config.DEFAULT_SAMPLES)
    mc.add_argument("--shards", type=int, default=config.DEFAULT_SHARDS)

    lattice_flags = LabArgumentParser(add_help=False)
    lattice_flags.add_argument("--eta", type=int, default=None)
    lattice_flags.add_argument("--window", type=float, default=None,
                               help="half-width around mu (default 2 sigma)")

    family = LabArgumentParser(add_help=False)
    family.add_argument("--B", type=float, default=None, dest="B", help="half-width (default G/8)")
    family.add_argument("--s", type=int, default=config.DEFAULT_S, dest="s")
    family.add_argument("--alpha-grid", type=_alpha_grid, dest="alpha_grid",
                        default=[round(0.1 * i, 1) for i in range(10)])

    sub.add_parser("sample", parents=[common, mc], help="histogram of kAP counts")
    decompose = sub.add_parser("decompose", parents=[common, mc], help="per-sample normalised components")
    decompose.set_defaults(samples=config.DEFAULT_COMPONENT_SAMPLES)
    sub.add_parser("sigma", parents=[common], help="exact sigma table")
    sub.add_parser("lattice", parents=[common, lattice_flags], help="lattice constants")
    theta = sub.add_parser("theta", parents=[common], help="theta profile constants")
    theta.add_argument("--delta", type=float, default=None)
    theta.add_argument("--points", type=int, default=101)
    sub.add_parser("scan", parents=[common, mc, lattice_flags], help="local limit deviation scan")
    sub.add_parser("predict", parents=[common, lattice_flags], help="discrete-Gaussian density model")
    sub.add_parser("compare", parents=[common, mc, lattice_flags, family], help="scan vs model vs LCLT null")
    sub.add_parser("selftest", parents=[common], help="invariant suite")
    return parser

def _run_config(args):
    return {key: value for key, value in sorted(vars(args).items())
            if key not in NON_CONFIG_KEYS and key != "command"}

def _default_out(args, ext):
    return config.OUTPUT_DIR / f"{args.command}_n{args.n}_k{args.k}.{ext}"

def _experiment(args, record_components=False):
    return ExperimentConfig(n=args.n, k=args.k, p=args.p, num_samples=args.samples, seed=args.seed,
                            shards=args.shards, record_components=record_components)

def _model(args):
    params = APParams(args.n, args.k)
    params.require_multilinear()
    sigma = load_or_compute(params, args.p)
    return build_lattice_model(args.n, args.k, args.p, sigma, eta=getattr(args, "eta", None))

def _window(args, model):
    return args.window if args.window is not None else 2.0 * model.sigma_total

def _integers_in_family(model, alpha, B, s):
    """Number of integers x with x - mu - x0 in L_alpha(B, s)."""
    centre = model.mu + model.x0
    reach = (s + 1) * model.G + B
    x = np.arange(math.floor(centre - reach), math.ceil(centre + reach) + 1)
    return int(np.count_nonzero(in_L_alpha(model, IntervalFamily(alpha, B, s), x - centre)))

# --- command handlers: each returns (table or dict, summary dict) ---

def cmd_sample(args):
    hist, _, summary = run_mc(_experiment(args))
    return hist.to_frame(), summary.to_dict()

def cmd_decompose(args):
    APParams(args.n, args.k).require_multilinear()
    _, components, summary = run_mc(_experiment(args, record_components=True))
    return components.to_frame(), summary.to_dict()

def cmd_sigma(args):
    params = APParams(args.n, args.k)
    params.require_multilinear()
    table = load_or_compute(params, args.p)
    return table.to_dict(), {"sigma_total": table.sigma_total, "sigma_Y": table.sigma_Y}

def cmd_lattice(args):
    model = _model(args)
    radius = monotone_radius(model)
    t = np.arange(-radius, radius + 1)
    data = {
        "model": model.to_dict(),
        "monotone_radius": radius,
        "lattice_values": [{"t": int(ti), "A_t": float(v)} for ti, v in zip(t, a_t(model, t))],
    }
    return data, {"G": model.G, "delta": model.delta, "x0": model.x0}

def cmd_theta(args):
    delta = args.delta if args.delta is not None else _model(args).delta
    ev = ThetaEvaluator(delta)
    x_max, x_min, ratio = extremal_ratio(ev)
    if args.points < 2:
        raise ParameterError(f"--points must be at least 2, got {args.points}.")
    grid = np.linspace(0.0, 1.0, args.points)
    data = {
        "delta": ev.delta,
        "x_max": x_max,
        "x_min": x_min,
        "C": ratio,
        "mean": ev.mean,
        "variance": variance_lower_bound(ev),
        "profile": [{"x": float(x), "f": float(f)} for x, f in zip(grid, f_direct(grid, ev))],
    }
    return data, {"C": ratio, "delta": ev.delta}

def cmd_scan(args):
    model = _model(args)
    hist, _, summary = run_mc(_experiment(args))
    report = lclt_scan(hist, model, _window(args, model))
    result = {"mc": summary.to_dict(), **report.to_dict()}
    if args.format == "csv":
        result = report.records
    return result, {"max_scaled_deviation": report.max_scaled_deviation, "pooled": report.pooled}

def cmd_predict(args):
    model = _model(args)
    w = _window(args, model)
    x = np.arange(math.ceil(model.mu - w), math.floor(model.mu + w) + 1)
    df = pd.DataFrame({
        "x": x,
        "predicted": predicted_pmf(model, popcount_distribution(model), x),
        "gaussian": sps.norm.pdf(x, loc=model.mu, scale=model.sigma_total),
    })
    return df, {"window": [int(x[0]), int(x[-1])], "mass": float(df["predicted"].sum())}

def cmd_compare(args):
    model = _model(args)
    hist, _, summary = run_mc(_experiment(args))
    w = _window(args, model)
    report = lclt_scan(hist, model, w)
    B = args.B if args.B is not None else config.DEFAULT_B_FRACTION * model.G
    ev = ThetaEvaluator(model.delta)

    profile = l_alpha_estimates(hist, model, args.alpha_grid, B, args.s)
    profile["predicted"] = [predicted_L_probability(model, IntervalFamily(a, B, args.s, model.eta), ev).value
                            for a in profile["alpha"]]
    correlation = float(np.corrcoef(profile["estimate"], profile["predicted"])[0, 1]) if len(profile) > 1 else float("nan")
    profile["lclt_null"] = [lclt_interval_prediction(_integers_in_family(model, a, B, args.s), model.sigma_total)
                            for a in profile["alpha"]]
    estimates = profile["estimate"].to_numpy()
    empirical_ratio = float(estimates.max() / estimates.min()) if estimates.min() > 0 else float("inf")

    window = report.window
    tv = total_variation(hist, lambda x: predicted_pmf(model, popcount_distribution(model), x), window)
    normalized = (hist.expand() - model.mu) / model.sigma_total
    data = {
        "mc": summary.to_dict(),
        "model": model.to_dict(),
        "scan": {key: value for key, value in report.to_dict().items() if key != "records"},
        "l_alpha": profile.to_dict(orient="records"),
        "l_alpha_correlation": correlation,
        "l_alpha_max_min_ratio": empirical_ratio,
        "lclt_null_max_min_ratio": float(profile["lclt_null"].max() / profile["lclt_null"].min()),
        "theta_constant": extremal_ratio(ev)[2],
        "empirical_oscillation_constant": empirical_oscillation_constant(hist, model, w),
        "total_variation": tv,
        "kolmogorov_distance": kolmogorov_distance(normalized),
        "anticoncentration": anticoncentration(hist, model.n),
        "B": B,
        "s": args.s,
    }
    summary_fields = {key: data[key] for key in ("l_alpha_correlation", "l_alpha_max_min_ratio",
                                                 "total_variation", "kolmogorov_distance")}
    summary_fields["pooled_ratio"] = report.pooled["ratio"]
    return data, summary_fields

def cmd_selftest(args):
    report = run_selftest()
    if not report.ok:
        raise SelftestFailure(report.failed)
    return report.to_dict(), {"passed": len(report.results)}

HANDLERS = {
    "sample": cmd_sample,
    "decompose": cmd_decompose,
    "sigma": cmd_sigma,
    "lattice": cmd_lattice,
    "theta": cmd_theta,
    "scan": cmd_scan,
    "predict": cmd_predict,
    "compare": cmd_compare,
    "selftest": cmd_selftest,
}

def _apply_record(args, parser):
    """Replaces the parsed settings with those stored in a record."""
    record = ExperimentRecord.from_file(args.from_record)
    if record.command not in HANDLERS:
        raise ParameterError(f"Record {args.from_record} names unknown command {record.command!r}.")
    replay = parser.parse_args([record.command])
    for key, value in record.config.items():
        setattr(replay, key, value)
    if isinstance(getattr(replay, "alpha_grid", None), str):
        replay.alpha_grid = _alpha_grid(replay.alpha_grid)
    replay.out = args.out if args.out is not None else (Path(record.outputs[0]) if record.outputs else None)
    replay.from_record = None
    replay.log_level = args.log_level
    logger.info(f"Replaying {record.command} from {args.from_record}")
    return replay

def dispatch(args, parser):
    """Runs one command and writes its artifacts. Returns the primary output path."""
    if args.from_record is not None:
        args = _apply_record(args, parser)
    if not APParams(args.n, args.k).gcd_ok:
        logger.warning(f"gcd({args.n}, ({args.k}-1)!) != 1: the decomposition-based commands will refuse.")
    run_config = _run_config(args)
    start = time.perf_counter()
    result, summary = HANDLERS[args.command](args)
    wall_time = time.perf_counter() - start

    fmt = args.format or ("csv" if isinstance(result, pd.DataFrame) else DEFAULT_FORMATS.get(args.command, "json"))
    out = Path(args.out) if args.out is not None else _default_out(args, fmt)
    if isinstance(result, pd.DataFrame):
        if fmt == "csv":
            write_csv(result, out, run_config)
        else:
            write_json({"rows": result.to_dict(orient="records")}, out, run_config)
    else:
        write_json(result, out, run_config)

    record_config = dict(run_config, shards=getattr(args, "shards", config.DEFAULT_SHARDS), format=args.format)
    record = ExperimentRecord(command=args.command, config=record_config, wall_time=wall_time,
                              summary=summary, outputs=[str(out)])
    write_record(record, out)
    return out

def main(argv=None):
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except KapLabError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code

    config.ensure_directories()
    setup_logging(args.log_level, config.LOG_FILE)
    try:
        out = dispatch(args, parser)
    except KapLabError as e:
        logger.error(f"{args.command} failed: {e.message}")
        return e.exit_code
    except OSError as e:
        logger.error(f"{args.command} could not write its output: {e}")
        return 1
    print(f"{args.command}: wrote {out}")
    return 0

if __name__ == "__main__":
    sys.exit(main())

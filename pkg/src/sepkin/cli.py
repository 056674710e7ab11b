"""Command-line interface: ``sepkin synth | analyze | fit-rates | benchmark``.

Log verbosity follows the ``SEPKIN_LOG_LEVEL`` environment variable
(``WARNING`` by default). Every command exits with status 0 on success,
1 on a data or numerical error and 2 on a usage error.
"""

import argparse
import csv
import hashlib
import logging
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .io import (read_json, read_labeled_csv, read_measurement, write_columns, write_json,
                 write_labeled_csv, write_measurement)
from .pipeline import analyze
from .ratefit import RateFitError, fit_rates, score_recovery
from .scenario import BUNDLED_SCENARIOS, bundled_scenario, config_hash, load_scenario

log = logging.getLogger("sepkin")

LOG_ENV = "SEPKIN_LOG_LEVEL"
BENCH_FIELDS = ["pull", "delta", "seed", "r", "kinetics_error", "spectra_error",
                "max_K_error", "runtime_s", "status", "detail"]


class UsageError(Exception):
    pass


def _sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _species_labels(r):
    return [f"S{i + 1}" for i in range(r)]


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _load_config(args):
    if args.config:
        return load_scenario(args.config)
    return bundled_scenario(args.scenario)


# ---------------------------------------------------------------- synth

def cmd_synth(args):
    cfg = _load_config(args).with_(pull=args.pull, delta=args.noise, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    g = cfg.generate()
    ms = g.measurement
    labels = [w.label for w in g.fingerprints]
    write_measurement(out / "M.csv", ms.frequencies, ms.times, ms.M)
    write_labeled_csv(out / "W_true.csv", g.W, ms.frequencies, labels)
    write_labeled_csv(out / "H_true.csv", g.H, labels, ms.times)
    write_json(out / "K_true.json", {"species": labels, "K": g.K, "h0": g.h0})
    write_json(out / "fingerprints.json", {
        "species": [{"label": w.label,
                     "peaks": [{"base": p.base, "width": p.width, "intensity": p.intensity,
                                "shape": p.shape} for p in w.peaks]}
                    for w in g.fingerprints],
    })
    config = cfg.to_dict()
    write_json(out / "config.json", config)
    write_json(out / "provenance.json", {**ms.provenance, "config_sha256": config_hash(config)})
    log.info("wrote %d x %d measurement to %s", *ms.M.shape, out)
    return 0


# ---------------------------------------------------------------- analyze

def cmd_analyze(args):
    if args.species is None and not args.auto_rank:
        raise UsageError("give the species count with -r/--species or pass --auto-rank")
    freqs, times, M = read_measurement(args.measurement)
    r = None if args.auto_rank else args.species
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        res = analyze(M, r=r, window=args.window, threshold_multiplier=args.threshold_mult,
                      drop_ratio=args.drop_ratio)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    labels = _species_labels(res.r)
    write_labeled_csv(out / "W.csv", res.W, freqs, labels)
    write_labeled_csv(out / "H.csv", res.H, labels, times)

    side = Path(args.measurement).with_name("provenance.json")
    report = {
        "version": __version__,
        "input": {"path": str(args.measurement), "sha256": _sha256_file(args.measurement),
                  "shape": list(M.shape)},
        "flags": {"species": args.species, "auto_rank": args.auto_rank, "window": args.window,
                  "threshold_mult": args.threshold_mult, "drop_ratio": args.drop_ratio},
        "source_provenance": read_json(side) if side.exists() else None,
        "r": res.r,
        "auto_rank": res.auto_rank,
        "singular_values": res.singular_values,
        "characteristic_rows": res.characteristic_rows,
        "characteristic_frequencies": freqs[res.characteristic_rows],
        "selection_residual_norms": res.unmix.selected.residual_norms,
        "scaling": res.unmix.scaling,
        "relative_residual": res.unmix.relative_residual,
        "preprocess": res.preprocess.to_dict(),
        "warnings": [str(w.message) for w in caught],
    }
    write_json(out / "report.json", report)

    plots = out / "plot_data"
    plots.mkdir(exist_ok=True)
    for i, lab in enumerate(labels):
        write_columns(plots / f"spectrum_{lab}.txt", [freqs, res.W[:, i]], ["frequency", lab])
    write_columns(plots / "kinetics.txt", [times, *res.H], ["time", *labels])
    for w in caught:
        log.warning("%s", w.message)
    log.info("selected frequencies %s", report["characteristic_frequencies"].tolist())
    return 0


# ---------------------------------------------------------------- fit-rates

def _read_h0(path, r):
    if str(path).endswith(".json"):
        data = read_json(path)
        h0 = data["h0"] if isinstance(data, dict) else data
    else:
        h0 = np.loadtxt(path, delimiter=",", ndmin=1)
    h0 = np.asarray(h0, dtype=float).ravel()
    if h0.shape != (r,):
        raise ValueError(f"h0 has {h0.size} entries, kinetics has {r} species")
    return h0


def cmd_fit_rates(args):
    if (args.h0 is None) == (not args.h0_from_first_column):
        raise UsageError("give exactly one of --h0 PATH or --h0-from-first-column")
    H, labels, times = read_labeled_csv(args.kinetics)
    if isinstance(times, list):
        raise ValueError(f"{args.kinetics}: time labels must be numeric")
    h0 = None if args.h0_from_first_column else _read_h0(args.h0, H.shape[0])
    K0 = None
    if args.k0:
        K0 = np.asarray(read_json(args.k0)["K"], dtype=float)
    t0 = time.perf_counter()
    try:
        res = fit_rates(H, times, h0=h0, K0=K0, tol=args.tol, max_iter=args.max_iters)
    except RateFitError as exc:
        write_json(args.out, {"error": str(exc), "last_iterate": exc.last_iterate})
        raise
    payload = res.to_dict()
    payload["species"] = [str(x) for x in labels]
    payload["runtime_s"] = time.perf_counter() - t0
    payload["input_sha256"] = _sha256_file(args.kinetics)
    write_json(args.out, payload)
    if not res.converged:
        log.warning("rate fit stopped before the gradient tolerance: %s", res.message)
    return 0


# ---------------------------------------------------------------- benchmark

def cell_seed(base_seed, index):
    """Seed for sweep cell ``index``, independent of worker scheduling."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


def run_cell(config_dict, pull, delta, seed, window, threshold_mult, auto_rank, max_iters, tol):
    """One synth -> analyze -> fit cycle; failures are reported in the row."""
    from .scenario import ScenarioConfig

    row = {"pull": pull, "delta": delta, "seed": seed, "r": "", "kinetics_error": "",
           "spectra_error": "", "max_K_error": "", "runtime_s": "", "status": "ok", "detail": ""}
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            cfg = ScenarioConfig.from_dict(config_dict).with_(pull=pull, delta=delta, seed=seed)
            g = cfg.generate()
            r_true = g.H.shape[0]
            res = analyze(g.measurement.M, r=None if auto_rank else r_true, window=window,
                          threshold_multiplier=threshold_mult)
            row["r"] = res.r
            if res.r != r_true:
                row["status"] = "rank_mismatch"
                row["detail"] = f"estimated {res.r} species, true {r_true}"
            else:
                sc = score_recovery(g.W, g.H, res.W, res.H)
                perm = np.asarray(sc["perm"])
                row["kinetics_error"] = sc["kinetics_error"]
                row["spectra_error"] = sc["spectra_error"]
                fit = fit_rates(res.H[perm], g.measurement.times, h0=g.h0,
                                tol=tol, max_iter=max_iters)
                row["max_K_error"] = float(np.abs(fit.K_hat - g.K).max())
                if not fit.converged:
                    row["detail"] = "rate fit not converged"
    except Exception as exc:  # a failed cell must not stop the sweep
        row["status"] = "error"
        row["detail"] = f"{type(exc).__name__}: {exc}"
    row["runtime_s"] = time.perf_counter() - t0
    return row


def cmd_benchmark(args):
    cfg = _load_config(args)
    base = cfg.to_dict()
    cells = []
    for pull in args.pull_sweep:
        for delta in args.delta_sweep:
            for rep in range(args.seeds):
                seed = cell_seed(args.seed, len(cells))
                cells.append((base, pull, delta, seed, args.window, args.threshold_mult,
                              args.auto_rank, args.max_iters, args.tol))
    for c in cells:
        if not 0 <= c[1] <= 1 or c[2] < 0:
            raise UsageError(f"invalid sweep cell pull={c[1]}, delta={c[2]}")
    workers = args.workers or min(len(cells), os.cpu_count() or 1)
    log.info("running %d cells on %d worker(s)", len(cells), workers)
    if workers == 1:
        rows = [run_cell(*c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, *zip(*cells)))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        for row in rows:
            w.writerow({k: ("%.17g" % v if isinstance(v, float) else v) for k, v in row.items()})
    n_bad = sum(r["status"] != "ok" for r in rows)
    if n_bad:
        log.warning("%d of %d cells did not complete cleanly", n_bad, len(rows))
    return 0


# ---------------------------------------------------------------- parser

def _add_scenario_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="scenario JSON file")
    src.add_argument("--scenario", default="canonical", choices=BUNDLED_SCENARIOS,
                     help="bundled scenario (default: canonical)")


def _add_preprocess_args(p):
    p.add_argument("--window", type=_positive_int, default=5,
                   help="odd running-mean window along time; 1 disables smoothing (default 5)")
    p.add_argument("--threshold-mult", type=float, default=3.0,
                   help="drop rows whose maximum is at most this multiple of the noise level")


def _add_fit_args(p):
    p.add_argument("--max-iters", type=_positive_int, default=2000)
    p.add_argument("--tol", type=float, default=1e-7,
                   help="gradient max-norm at which the rate fit stops")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sepkin", description="Spectra and reaction kinetics from time-resolved spectra.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic measurement")
    _add_scenario_args(p)
    p.add_argument("--pull", type=float, help="interference pull in [0, 1]")
    p.add_argument("--noise", type=float, help="noise level delta >= 0")
    p.add_argument("--seed", type=int, help="noise RNG seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="recover spectra and kinetics from M.csv")
    p.add_argument("measurement", help="measurement CSV (header: times, first column: frequencies)")
    p.add_argument("-r", "--species", type=_positive_int, help="number of species")
    p.add_argument("--auto-rank", action="store_true", help="estimate the species count")
    p.add_argument("--drop-ratio", type=float, default=0.01,
                   help="singular value cut-off relative to the largest (with --auto-rank)")
    _add_preprocess_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit-rates", help="fit a first-order rate matrix to H.csv")
    p.add_argument("kinetics", help="kinetics CSV (rows: species, header: times)")
    p.add_argument("--h0", help="initial concentrations (JSON list, JSON object with 'h0', or CSV)")
    p.add_argument("--h0-from-first-column", action="store_true",
                   help="use the first column of the kinetics as h0")
    p.add_argument("--k0", help="JSON file with a starting 'K'")
    _add_fit_args(p)
    p.add_argument("--out", required=True, help="output K.json")
    p.set_defaults(func=cmd_fit_rates)

    p = sub.add_parser("benchmark", help="sweep interference and noise levels")
    _add_scenario_args(p)
    p.add_argument("--pull-sweep", type=_float_list, default=[0.0], help="e.g. 0,0.25,0.5")
    p.add_argument("--delta-sweep", type=_float_list, default=[0.0], help="e.g. 0,0.4")
    p.add_argument("--seeds", type=_positive_int, default=1, help="repetitions per cell")
    p.add_argument("--seed", type=int, default=0, help="base seed for per-cell seeds")
    p.add_argument("--auto-rank", action="store_true")
    p.add_argument("--workers", type=_positive_int, help="worker processes (default: CPU count)")
    _add_preprocess_args(p)
    _add_fit_args(p)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, ArithmeticError, OSError, KeyError) as exc:
        log.error("%s", exc)
        print(f"sepkin {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

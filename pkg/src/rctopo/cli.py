"""Command-line entry point: ``rctopo <command> [options]``.

Every command accepts ``--config FILE`` (JSON, keys named like the
``RunConfig`` fields); explicit flags override the file. Data goes to files in
the output directory and a one-line JSON summary goes to stdout; diagnostics
go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import best_over_thresholds, fit_glasso, fit_regression
from .errors import RcTopoError, SingularAtFrequency
from .experiments import (
    INPUT_KINDS,
    METHODS,
    RunConfig,
    learn_with_fallback,
    manifest,
    run_sweep,
    summarize,
    write_json,
)
from .network import discretize, load_network, true_edge_set, validate
from .oracle import ZDomainModel, analytic_wiener, check_theorem3_conditions
from .simulate import export_csv, import_csv, simulate_panel
from .topology import reconstruction_error
from .wiener import FrequencyGrid

log = logging.getLogger("rctopo")

OUTPUT_ROOT_ENV = "RCTOPO_OUTPUT_ROOT"
DIGITS = 12


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.{DIGITS}g}"
    return str(x)


def write_table(path, rows, columns) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_fmt(r.get(c)) for c in columns])


def _output_dir(cfg: RunConfig, command: str) -> Path:
    if cfg.output:
        out = Path(cfg.output)
    else:
        out = Path(os.environ.get(OUTPUT_ROOT_ENV, "rctopo-runs")) / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {}
    for name in RunConfig.field_names():
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = tuple(value) if isinstance(value, list) else value
    cfg = cfg.updated(**overrides)
    cfg.check()
    return cfg


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _truth_for(cfg: RunConfig, args):
    path = getattr(args, "truth", None)
    if path is None:
        return None, None
    net = load_network(path)
    return net, true_edge_set(net)


def cmd_simulate(args) -> int:
    cfg = _resolve(args)
    net = cfg.load_network()
    report = validate(net)
    if not report.ok:
        raise RcTopoError("; ".join(report.findings))
    dyn = discretize(net)
    plan = cfg.noise_plan(net.m)
    panel = simulate_panel(dyn, plan, cfg.samples, cfg.burn_in, net.labels)
    out = _output_dir(cfg, "simulate")
    export_csv(panel, out / "panel.csv")
    write_json(out / "manifest.json", manifest("simulate", cfg, net, spectral_radius=dyn.spectral_radius))
    _emit({"panel": str(out / "panel.csv"), "nodes": net.m, "samples": panel.n_samples})
    return 0


def cmd_learn(args) -> int:
    cfg = _resolve(args)
    panel = import_csv(args.panel)
    net, truth = _truth_for(cfg, args)
    if net is not None and list(net.labels) != list(panel.node_labels):
        raise RcTopoError(f"panel labels {panel.node_labels} do not match network nodes {net.labels}")
    est, used_F = learn_with_fallback(panel, cfg, truth)
    out = _output_dir(cfg, "learn")
    est.save(out / "estimate.json")
    if est.bank is not None:
        est.bank.save(out / "bank.json")
    write_json(out / "manifest.json",
               manifest("learn", cfg, net, panel=str(args.panel), lag_order_used=used_F))
    labels = panel.node_labels
    summary = {
        "edges": [[labels[i], labels[j]] for i, j in sorted(est.pruned_edges)],
        "moral_edges": len(est.moral_edges),
        "estimate": str(out / "estimate.json"),
    }
    if est.error is not None:
        summary["error"] = est.error
    _emit(summary)
    return 0


def cmd_baseline(args) -> int:
    cfg = _resolve(args)
    panel = import_csv(args.panel)
    net, truth = _truth_for(cfg, args)
    if args.method == "regression":
        fit = fit_regression(panel, cfg.regression_gamma, cfg.threshold)
        matrix = fit.coefficients
    else:
        fit = fit_glasso(panel, cfg.glasso_lambda, cfg.threshold)
        matrix = fit.precision
    labels = panel.node_labels
    result = {
        "method": args.method,
        "threshold": cfg.threshold,
        "edges": [[labels[i], labels[j]] for i, j in sorted(fit.edges)],
        "matrix": np.asarray(matrix).tolist(),
        "node_labels": list(labels),
    }
    if truth is not None:
        result["error"] = reconstruction_error(fit.edges, truth)
        best, best_t = best_over_thresholds(fit, truth, cfg.thresholds)
        result["best_error"] = best
        result["best_threshold"] = best_t
    out = _output_dir(cfg, "baseline")
    write_json(out / f"{args.method}.json", result)
    write_json(out / "manifest.json", manifest("baseline", cfg, net, panel=str(args.panel)))
    _emit({k: result[k] for k in result if k != "matrix"})
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve(args)
    rows = run_sweep(cfg)
    out = _output_dir(cfg, "sweep")
    write_table(out / "results.csv", rows,
                ["method", "input", "n_samples", "seed", "error", "threshold", "wall_time",
                 "status", "message"])
    summary = summarize(rows)
    write_table(out / "summary.csv", summary,
                ["method", "input", "n_samples", "median_error", "exact_recoveries", "trials",
                 "failures"])
    write_json(out / "manifest.json", manifest("sweep", cfg, cfg.load_network()))
    failed = sum(r["status"] != "ok" for r in rows)
    _emit({"rows": len(rows), "failed": failed, "results": str(out / "results.csv")})
    return 0


def cmd_oracle(args) -> int:
    cfg = _resolve(args)
    net = cfg.load_network()
    dyn = discretize(net)
    model = ZDomainModel.from_dynamics(dyn, cfg.noise_plan(net.m), net.labels)
    j, i = (net.index_of(p) for p in args.pair)
    grid = FrequencyGrid.uniform(cfg.grid_size)
    rows, warnings = [], []
    for omega in grid.omegas:
        try:
            w = analytic_wiener(model, j, i, [omega])[0]
            rows.append({"omega": float(omega), "magnitude": float(abs(w)),
                         "phase": float(np.angle(w)), "abs_phase": float(abs(np.angle(w)))})
        except SingularAtFrequency as exc:
            warnings.append(str(exc))
            log.warning("%s", exc)
            rows.append({"omega": float(omega)})
    out = _output_dir(cfg, "oracle")
    write_table(out / "oracle.csv", rows, ["omega", "magnitude", "phase", "abs_phase"])
    report = check_theorem3_conditions(model, j, i, grid)
    write_json(out / "phase_conditions.json",
               dict(report.to_dict(), pair=list(args.pair), warnings=warnings))
    write_json(out / "manifest.json", manifest("oracle", cfg, net, pair=list(args.pair)))
    _emit({"table": str(out / "oracle.csv"), "relation": report.relation,
           "pathological": report.pathological, "singular_frequencies": len(warnings)})
    return 0


def cmd_eval(args) -> int:
    cfg = _resolve(args)
    net = load_network(args.truth) if args.truth else cfg.load_network()
    data = json.loads(Path(args.estimate).read_text())
    edges = data["edges"]
    est = frozenset((net.index_of(a), net.index_of(b)) for a, b in edges)
    error = reconstruction_error(est, true_edge_set(net))
    _emit({"error": error, "estimated_edges": len(est)})
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--output", help="output directory (default: $%s/<command>)" % OUTPUT_ROOT_ENV)
    p.add_argument("--network", help="network JSON file (default: shipped 5-zone building)")
    p.add_argument("--workers", type=int)


def _add_noise(p: argparse.ArgumentParser) -> None:
    p.add_argument("--noise", choices=INPUT_KINDS)
    p.add_argument("--variance", type=float)
    p.add_argument("--ar-coefficient", dest="ar_coefficient", type=float)
    p.add_argument("--fir-taps", dest="fir_taps", type=float, nargs="+")
    p.add_argument("--seed", type=int)


def _gamma(text):
    return text if text == "auto" else float(text)


def _add_algorithm(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lag-order", dest="lag_order", type=int)
    p.add_argument("--gamma", type=_gamma, help="L1 penalty, or 'auto' for the sample-size default")
    p.add_argument("--rho", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--grid-size", dest="grid_size", type=int)
    p.add_argument("--phase-snr", dest="phase_snr", type=float)
    p.add_argument("--magnitude-floor", dest="magnitude_floor", type=float)


def _add_baseline(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold", type=float)
    p.add_argument("--thresholds", type=float, nargs="+")
    p.add_argument("--regression-gamma", dest="regression_gamma", type=float)
    p.add_argument("--glasso-lambda", dest="glasso_lambda", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rctopo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a temperature panel")
    _add_common(p)
    _add_noise(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", help="learn the topology of a panel")
    p.add_argument("panel")
    p.add_argument("--truth", help="network file used to score the estimate")
    _add_common(p)
    _add_algorithm(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("baseline", help="run a comparison method on a panel")
    p.add_argument("panel")
    p.add_argument("--method", choices=("regression", "glasso"), default="regression")
    p.add_argument("--truth", help="network file used to score the estimate")
    _add_common(p)
    _add_baseline(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("sweep", help="error-versus-samples comparison of all methods")
    _add_common(p)
    _add_noise(p)
    _add_algorithm(p)
    _add_baseline(p)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--samples", dest="sweep_samples", type=int, nargs="+")
    p.add_argument("--trials", type=int)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--methods", nargs="+", choices=METHODS)
    p.add_argument("--inputs", nargs="+", choices=INPUT_KINDS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="exact Wiener filter of one pair")
    p.add_argument("--pair", nargs=2, required=True, metavar=("TARGET", "SOURCE"))
    _add_common(p)
    _add_noise(p)
    p.add_argument("--grid-size", dest="grid_size", type=int)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("eval", help="score an estimate file against a network")
    p.add_argument("estimate")
    p.add_argument("--truth", help="network file (default: configured network)")
    _add_common(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (RcTopoError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"rctopo {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

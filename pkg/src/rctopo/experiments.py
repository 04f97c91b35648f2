"""Run configuration and the error-versus-samples comparison sweep."""
from __future__ import annotations

import dataclasses
import json
import logging
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .baselines import (
    DEFAULT_GLASSO_LAMBDA,
    DEFAULT_REGRESSION_GAMMA,
    DEFAULT_THRESHOLD,
    THRESHOLD_SWEEP,
    best_over_thresholds,
    fit_glasso,
    fit_regression,
)
from .errors import InsufficientSamples, RcTopoError
from .network import RcNetwork, default_network_path, discretize, load_network, true_edge_set
from .simulate import NoisePlan, TimeSeriesPanel, simulate_panel
from .topology import (
    DEFAULT_MAGNITUDE_FLOOR,
    DEFAULT_PHASE_SNR,
    DEFAULT_RHO,
    DEFAULT_TAU,
    learn_topology,
)
from .wiener import DEFAULT_GRID_SIZE, DEFAULT_LAG_ORDER, FrequencyGrid, default_gamma, max_lag_order

log = logging.getLogger(__name__)

METHODS = ("wiener", "wiener_reg", "regression", "glasso")
INPUT_KINDS = ("white", "ar1", "fir")


@dataclass
class RunConfig:
    network: Optional[str] = None
    noise: str = "white"
    variance: float = 1.0
    ar_coefficient: float = 0.5
    fir_taps: tuple = ()
    seed: int = 0
    samples: int = 100_000
    burn_in: int = 1000
    lag_order: int = DEFAULT_LAG_ORDER
    gamma: object = 0.0
    rho: float = DEFAULT_RHO
    tau: float = DEFAULT_TAU
    grid_size: int = DEFAULT_GRID_SIZE
    phase_snr: float = DEFAULT_PHASE_SNR
    magnitude_floor: float = DEFAULT_MAGNITUDE_FLOOR
    regression_gamma: float = DEFAULT_REGRESSION_GAMMA
    glasso_lambda: float = DEFAULT_GLASSO_LAMBDA
    threshold: float = DEFAULT_THRESHOLD
    thresholds: tuple = THRESHOLD_SWEEP
    output: Optional[str] = None
    sweep_samples: tuple = (1000, 10_000, 100_000)
    trials: int = 10
    seeds: tuple = ()
    methods: tuple = METHODS
    inputs: tuple = ("white", "ar1")
    workers: int = 1

    @classmethod
    def field_names(cls) -> set:
        return {f.name for f in dataclasses.fields(cls)}

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        unknown = set(data) - cls.field_names()
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = cls()
        for key, value in data.items():
            if isinstance(value, list):
                value = tuple(value)
            setattr(cfg, key, value)
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        cfg = cls.from_mapping(data)
        if cfg.network is not None and not Path(cfg.network).is_absolute():
            cfg.network = str((path.parent / cfg.network).resolve())
        return cfg

    def updated(self, **overrides) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def check(self) -> None:
        problems = []
        if self.network is not None and not Path(self.network).exists():
            problems.append(f"network file not found: {self.network}")
        if self.noise not in INPUT_KINDS:
            problems.append(f"noise must be one of {INPUT_KINDS}, got {self.noise!r}")
        positive = ("variance", "samples", "rho", "tau", "grid_size", "phase_snr",
                    "glasso_lambda", "threshold", "trials", "workers")
        for name in positive:
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be positive")
        for name in ("burn_in", "lag_order", "regression_gamma", "magnitude_floor"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be non-negative")
        if self.gamma != "auto" and not (isinstance(self.gamma, (int, float)) and self.gamma >= 0):
            problems.append("gamma must be a non-negative number or 'auto'")
        if not abs(self.ar_coefficient) < 1:
            problems.append("ar_coefficient must have magnitude below 1")
        if self.noise == "fir" and not self.fir_taps:
            problems.append("fir noise needs fir_taps")
        bad = set(self.methods) - set(METHODS)
        if bad:
            problems.append(f"unknown methods {sorted(bad)}")
        bad = set(self.inputs) - set(INPUT_KINDS)
        if bad:
            problems.append(f"unknown input kinds {sorted(bad)}")
        if problems:
            raise ValueError("; ".join(problems))

    def network_path(self) -> Path:
        return Path(self.network) if self.network is not None else default_network_path()

    def load_network(self) -> RcNetwork:
        return load_network(self.network_path())

    def noise_plan(self, m: int, kind: Optional[str] = None, seed: Optional[int] = None) -> NoisePlan:
        kind = kind or self.noise
        coefficients = {"white": (), "ar1": (self.ar_coefficient,), "fir": tuple(self.fir_taps)}[kind]
        return NoisePlan.uniform(m, self.variance, kind, coefficients,
                                 self.seed if seed is None else seed)

    def resolve_gamma(self, m: int, n_samples: int) -> float:
        if self.gamma == "auto":
            return default_gamma(m, self.lag_order, n_samples)
        return float(self.gamma)

    def trial_seeds(self) -> list[int]:
        return list(self.seeds) if self.seeds else list(range(self.trials))


def manifest(command: str, cfg: RunConfig, net: Optional[RcNetwork] = None, **extra) -> dict:
    out = {"command": command, "version": __version__, "config": cfg.to_dict()}
    if net is not None:
        out["network_sha256"] = net.digest()
    out.update(extra)
    return out


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")


def _score_method(method: str, cfg: RunConfig, panel: TimeSeriesPanel, truth, grid):
    """Return ``(error, threshold)`` for one method on one panel."""
    if method in ("wiener", "wiener_reg"):
        gamma = 0.0 if method == "wiener" else default_gamma(panel.m, cfg.lag_order, panel.n_samples)
        est = learn_topology(panel, cfg.lag_order, gamma, cfg.rho, cfg.tau, grid,
                             cfg.phase_snr, cfg.magnitude_floor, truth=truth)
        return est.error, None
    if method == "regression":
        fit = fit_regression(panel, cfg.regression_gamma, cfg.threshold)
    else:
        fit = fit_glasso(panel, cfg.glasso_lambda, cfg.threshold)
    return best_over_thresholds(fit, truth, cfg.thresholds)


def run_trial(cfg: RunConfig, kind: str, n_samples: int, seed: int) -> list[dict]:
    """Simulate one panel and score every configured method on it."""
    net = cfg.load_network()
    dyn = discretize(net)
    truth = true_edge_set(net)
    grid = FrequencyGrid.uniform(cfg.grid_size)
    base = {"input": kind, "n_samples": n_samples, "seed": seed}
    try:
        panel = simulate_panel(dyn, cfg.noise_plan(net.m, kind, seed), n_samples, cfg.burn_in,
                               net.labels)
    except (RcTopoError, ValueError) as exc:
        return [dict(base, method=m, error=float("nan"), threshold=None, wall_time=0.0,
                     status="failed", message=str(exc)) for m in cfg.methods]
    rows = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        try:
            error, threshold = _score_method(method, cfg, panel, truth, grid)
            status, message = "ok", ""
        except (RcTopoError, ValueError, np.linalg.LinAlgError) as exc:
            error, threshold, status, message = float("nan"), None, "failed", str(exc)
            log.warning("%s/%s N=%d seed=%d failed: %s", method, kind, n_samples, seed, exc)
        rows.append(dict(base, method=method, error=error, threshold=threshold,
                         wall_time=time.perf_counter() - t0, status=status, message=message))
    return rows


def _run_trial_args(args):
    return run_trial(*args)


def run_sweep(cfg: RunConfig) -> list[dict]:
    """All rows of the sweep, ordered by (method, input, N, seed)."""
    cfg.check()
    tasks = [(cfg, kind, int(n), int(seed))
             for kind in cfg.inputs for n in cfg.sweep_samples for seed in cfg.trial_seeds()]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            batches = list(pool.map(_run_trial_args, tasks))
    else:
        batches = [run_trial(*t) for t in tasks]
    rows = [r for b in batches for r in b]
    order = {m: k for k, m in enumerate(cfg.methods)}
    rows.sort(key=lambda r: (order[r["method"]], r["input"], r["n_samples"], r["seed"]))
    return rows


def summarize(rows: list[dict]) -> list[dict]:
    """Median error per (method, input, N) over successful trials."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["method"], r["input"], r["n_samples"]), []).append(r)
    out = []
    for (method, kind, n), rs in groups.items():
        ok = [r["error"] for r in rs if r["status"] == "ok"]
        out.append({
            "method": method,
            "input": kind,
            "n_samples": n,
            "median_error": statistics.median(ok) if ok else float("nan"),
            "exact_recoveries": sum(e == 0 for e in ok),
            "trials": len(rs),
            "failures": len(rs) - len(ok),
        })
    return out


def learn_with_fallback(panel: TimeSeriesPanel, cfg: RunConfig, truth=None):
    """Run the learner, shrinking the lag order when the panel is too short for it.

    Returns ``(estimate, lag_order_used)``.
    """
    F = cfg.lag_order
    feasible = max_lag_order(panel.m, panel.n_samples)
    if feasible < 0:
        raise InsufficientSamples(
            f"{panel.n_samples} samples are too few for any lag order on {panel.m} nodes"
        )
    if feasible < F:
        log.warning("only %d samples: lag order reduced from %d to %d", panel.n_samples, F, feasible)
        F = feasible
    gamma = cfg.resolve_gamma(panel.m, panel.n_samples)
    est = learn_topology(panel, F, gamma, cfg.rho, cfg.tau, FrequencyGrid.uniform(cfg.grid_size),
                         cfg.phase_snr, cfg.magnitude_floor, truth=truth, workers=cfg.workers)
    return est, F


def median_error(rows, method, kind, n_samples) -> float:
    errs = [r["error"] for r in rows
            if r["method"] == method and r["input"] == kind and r["n_samples"] == n_samples
            and r["status"] == "ok"]
    return statistics.median(errs) if errs else float("nan")

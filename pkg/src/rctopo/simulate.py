"""WSS input generation, network rollout and CSV panel I/O."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import DimensionMismatch, MalformedFile, NonStationaryFilter
from .network import DiscreteDynamics

COLORINGS = ("white", "ar1", "fir")
MIN_WARMUP = 100


@dataclass(frozen=True)
class NoisePlan:
    """Per-node zero-mean Gaussian inputs, optionally colored.

    ``coefficients`` is the AR(1) pole for ``kind="ar1"`` (one shared value
    or one per node) or the impulse response taps for ``kind="fir"``.
    """

    variances: tuple
    kind: str = "white"
    coefficients: tuple = ()
    seed: int = 0

    @classmethod
    def uniform(cls, m: int, variance: float = 1.0, kind: str = "white",
                coefficients: Sequence[float] = (), seed: int = 0) -> "NoisePlan":
        return cls(tuple([float(variance)] * m), kind, tuple(float(c) for c in coefficients), int(seed))

    @property
    def m(self) -> int:
        return len(self.variances)

    def ar_poles(self) -> np.ndarray:
        c = np.asarray(self.coefficients, dtype=float)
        if c.size == 1:
            return np.full(self.m, float(c[0]))
        if c.size != self.m:
            raise DimensionMismatch(
                f"ar1 plan needs 1 or {self.m} coefficients, got {c.size}"
            )
        return c

    def check(self) -> None:
        if self.kind not in COLORINGS:
            raise ValueError(f"unknown coloring {self.kind!r}; expected one of {COLORINGS}")
        if any(not v > 0 for v in self.variances):
            raise ValueError("every node needs a positive input variance")
        if self.kind == "ar1":
            poles = self.ar_poles()
            if np.any(np.abs(poles) >= 1):
                raise NonStationaryFilter(f"AR(1) pole magnitude >= 1: {poles.tolist()}")
        if self.kind == "fir" and len(self.coefficients) == 0:
            raise ValueError("fir plan needs at least one tap")

    def psd(self, omegas) -> np.ndarray:
        """Input power spectra, shape ``(m, len(omegas))``."""
        w = np.atleast_1d(np.asarray(omegas, dtype=float))
        var = np.asarray(self.variances, dtype=float)[:, None]
        if self.kind == "white":
            return var * np.ones((1, w.size))
        if self.kind == "ar1":
            a = self.ar_poles()[:, None]
            return var / np.abs(1.0 - a * np.exp(-1j * w)[None, :]) ** 2
        taps = np.asarray(self.coefficients, dtype=float)
        resp = np.exp(-1j * np.outer(w, np.arange(taps.size))) @ taps
        return var * (np.abs(resp) ** 2)[None, :]


@dataclass(frozen=True)
class TimeSeriesPanel:
    values: np.ndarray
    dt: float = 1.0
    node_labels: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] < 1:
            raise DimensionMismatch(f"panel must be m x N with N >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("panel contains non-finite values")
        object.__setattr__(self, "values", v)
        labels = tuple(str(x) for x in self.node_labels) or tuple(str(k + 1) for k in range(v.shape[0]))
        if len(labels) != v.shape[0]:
            raise DimensionMismatch(f"{len(labels)} labels for {v.shape[0]} rows")
        object.__setattr__(self, "node_labels", labels)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    def permuted(self, order) -> "TimeSeriesPanel":
        order = list(order)
        return TimeSeriesPanel(self.values[order], self.dt, tuple(self.node_labels[k] for k in order))


def ar_warmup(pole: float) -> int:
    """Samples to discard so the AR(1) transient decays below 1e-12."""
    a = abs(pole)
    if a == 0:
        return MIN_WARMUP
    return max(MIN_WARMUP, math.ceil(math.log(1e-12) / math.log(a)))


def generate_inputs(plan: NoisePlan, m: int, n_samples: int) -> TimeSeriesPanel:
    """Draw the exogenous input panel ``P(k)``; deterministic in ``plan.seed``.

    Each node owns an independent generator spawned from the plan seed.
    """
    plan.check()
    if plan.m != m:
        raise DimensionMismatch(f"noise plan covers {plan.m} nodes, network has {m}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(plan.seed).spawn(m)]
    sigma = np.sqrt(np.asarray(plan.variances, dtype=float))
    out = np.empty((m, n_samples))
    if plan.kind == "white":
        for j, rng in enumerate(streams):
            out[j] = sigma[j] * rng.standard_normal(n_samples)
    elif plan.kind == "ar1":
        for j, (rng, a) in enumerate(zip(streams, plan.ar_poles())):
            warm = ar_warmup(a)
            w = sigma[j] * rng.standard_normal(n_samples + warm)
            out[j] = lfilter([1.0], [1.0, -a], w)[warm:]
    else:
        taps = np.asarray(plan.coefficients, dtype=float)
        warm = taps.size - 1
        for j, rng in enumerate(streams):
            w = sigma[j] * rng.standard_normal(n_samples + warm)
            out[j] = lfilter(taps, [1.0], w)[warm:]
    return TimeSeriesPanel(out)


def rollout(dyn: DiscreteDynamics, inputs: TimeSeriesPanel, burn_in: int = 0,
            node_labels: Optional[Sequence[str]] = None) -> TimeSeriesPanel:
    """Iterate ``T(k+1) = A T(k) + P(k)`` from ``T(0) = 0``.

    Column ``k`` of the result is the state after applying input ``k``; the
    first ``burn_in`` columns are dropped.
    """
    A = np.asarray(dyn.A, dtype=float)
    P = inputs.values
    m, n = P.shape
    if A.shape != (m, m):
        raise DimensionMismatch(f"A is {A.shape}, inputs have {m} rows")
    if not 0 <= burn_in < n:
        raise ValueError(f"burn_in must be in [0, {n}), got {burn_in}")
    T = np.empty((m, n))
    x = np.zeros(m)
    for k in range(n):
        x = A @ x + P[:, k]
        T[:, k] = x
    labels = tuple(node_labels) if node_labels is not None else inputs.node_labels
    return TimeSeriesPanel(T[:, burn_in:], dyn.dt, labels)


def simulate_panel(dyn: DiscreteDynamics, plan: NoisePlan, n_samples: int,
                   burn_in: int = 1000, node_labels=None) -> TimeSeriesPanel:
    """Convenience: inputs + rollout, returning exactly ``n_samples`` columns."""
    inputs = generate_inputs(plan, dyn.m, n_samples + burn_in)
    return rollout(dyn, inputs, burn_in, node_labels)


def export_csv(panel: TimeSeriesPanel, path, digits: int = 17) -> None:
    """Write one row per time step under a header of node labels."""
    fmt = f"%.{digits}g"
    with open(path, "w", newline="") as fh:
        fh.write(",".join(panel.node_labels) + "\n")
        np.savetxt(fh, panel.values.T, delimiter=",", fmt=fmt)


def import_csv(path, dt: float = 1.0) -> TimeSeriesPanel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"panel file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedFile(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if not header or any(h == "" for h in header):
            raise MalformedFile(f"{path}: header row has empty labels")
        if len(set(header)) != len(header):
            raise MalformedFile(f"{path}: duplicate labels in header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedFile(
                    f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}"
                )
            try:
                vals = [float(x) for x in row]
            except ValueError:
                for col, x in enumerate(row):
                    try:
                        float(x)
                    except ValueError:
                        raise MalformedFile(
                            f"{path}: row {lineno}, column {col + 1} ({header[col]}): "
                            f"non-numeric value {x!r}"
                        ) from None
            if not all(math.isfinite(v) for v in vals):
                raise MalformedFile(f"{path}: row {lineno} has non-finite values")
            rows.append(vals)
    if not rows:
        raise MalformedFile(f"{path}: no data rows")
    return TimeSeriesPanel(np.array(rows).T, dt, tuple(header))

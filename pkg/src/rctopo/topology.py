"""Topology learning: moral graph by H-infinity thresholding, then phase pruning.

A pair enters the moral graph when either direction of its filter has a peak
magnitude above ``rho``. A moral edge is removed as a spurious two-hop link
when, in both directions, the absolute phase lies within ``tau`` of pi at
every frequency where the response is reliably away from zero.

"Reliably away from zero" means both
``|W| > magnitude_floor * max|W|`` and ``|W| > phase_snr * stderr(W)``;
the second test only bites for estimated banks that carry coefficient
covariances.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import EmptyTruth
from .network import make_edge
from .simulate import TimeSeriesPanel
from .wiener import DEFAULT_GRID_SIZE, DEFAULT_LAG_ORDER, FilterBank, FrequencyGrid, fit_all

DEFAULT_RHO = 0.05
DEFAULT_TAU = 0.3
DEFAULT_PHASE_SNR = 10.0
DEFAULT_MAGNITUDE_FLOOR = 0.01


@dataclass
class PairDiagnostics:
    target: int
    source: int
    h_inf: float
    abs_phase: np.ndarray
    retained: np.ndarray
    near_pi: bool

    def summary(self) -> dict:
        kept = self.abs_phase[self.retained]
        return {
            "h_inf": self.h_inf,
            "min_abs_phase": float(kept.min()) if kept.size else None,
            "max_abs_phase": float(kept.max()) if kept.size else None,
            "retained_frequencies": int(self.retained.sum()),
            "near_pi": self.near_pi,
        }


@dataclass
class GraphEstimate:
    moral_edges: frozenset
    pruned_edges: frozenset
    diagnostics: dict = field(default_factory=dict)
    removed: dict = field(default_factory=dict)
    node_labels: tuple = ()
    params: dict = field(default_factory=dict)
    error: Optional[float] = None
    bank: Optional[FilterBank] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.pruned_edges <= self.moral_edges:
            raise ValueError("pruned edge set must be a subset of the moral graph")
        if any(i == j for i, j in self.moral_edges):
            raise ValueError("edge sets may not contain self-loops")

    @property
    def edges(self) -> frozenset:
        return self.pruned_edges

    def to_dict(self) -> dict:
        lab = self.node_labels or tuple(str(k + 1) for k in range(_node_count(self)))

        def named(es):
            return [[lab[i], lab[j]] for i, j in sorted(es)]

        out = {
            "node_labels": list(lab),
            "params": self.params,
            "moral_edges": named(self.moral_edges),
            "edges": named(self.pruned_edges),
            "removed": [
                {"edge": [lab[i], lab[j]], "reason": reason}
                for (i, j), reason in sorted(self.removed.items())
            ],
            "pairs": [
                {"target": lab[j], "source": lab[i], **d.summary()}
                for (j, i), d in sorted(self.diagnostics.items())
            ],
        }
        if self.error is not None:
            out["error"] = self.error
        return out

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def _node_count(est: GraphEstimate) -> int:
    nodes = {k for e in est.moral_edges for k in e}
    for j, i in est.diagnostics:
        nodes.update((j, i))
    return max(nodes) + 1 if nodes else 0


def _grid(grid) -> FrequencyGrid:
    if grid is None:
        return FrequencyGrid.uniform(DEFAULT_GRID_SIZE)
    if isinstance(grid, FrequencyGrid):
        return grid
    return FrequencyGrid(grid)


def moral_graph(bank, grid=None, rho: float = DEFAULT_RHO) -> frozenset:
    """Unordered pairs whose filter peak exceeds ``rho`` in either direction."""
    grid = _grid(grid)
    peaks = np.zeros((bank.m, bank.m))
    for j, i in bank.pairs():
        peaks[j, i] = np.max(np.abs(bank.response(j, i, grid)))
    return frozenset(
        (i, j) for i, j in combinations(range(bank.m), 2) if max(peaks[i, j], peaks[j, i]) > rho
    )


def pair_diagnostics(bank, j: int, i: int, grid=None, tau: float = DEFAULT_TAU,
                     phase_snr: float = DEFAULT_PHASE_SNR,
                     magnitude_floor: float = DEFAULT_MAGNITUDE_FLOOR) -> PairDiagnostics:
    grid = _grid(grid)
    w = bank.response(j, i, grid)
    mag = np.abs(w)
    peak = float(mag.max())
    retained = (mag > magnitude_floor * peak) & (mag > phase_snr * bank.response_stderr(j, i, grid))
    phase = np.abs(np.angle(w))
    kept = phase[retained]
    near_pi = bool(kept.size) and bool(np.all((kept >= np.pi - tau) & (kept <= np.pi)))
    return PairDiagnostics(j, i, peak, phase, retained, near_pi)


def prune_two_hop(moral_edges, bank, grid=None, tau: float = DEFAULT_TAU,
                  phase_snr: float = DEFAULT_PHASE_SNR,
                  magnitude_floor: float = DEFAULT_MAGNITUDE_FLOOR):
    """Drop moral edges whose phase is pi (within ``tau``) in both directions.

    Returns ``(edges, removed, diagnostics)`` where ``removed`` maps each
    dropped edge to a reason and ``diagnostics`` covers every ordered pair.
    """
    grid = _grid(grid)
    diags = {
        (j, i): pair_diagnostics(bank, j, i, grid, tau, phase_snr, magnitude_floor)
        for j, i in bank.pairs()
    }
    keep, removed = set(), {}
    for edge in moral_edges:
        a, b = make_edge(*edge)
        if diags[(a, b)].near_pi and diags[(b, a)].near_pi:
            removed[(a, b)] = f"phase within {tau:g} rad of pi at all retained frequencies"
        else:
            keep.add((a, b))
    return frozenset(keep), removed, diags


def reconstruction_error(estimated, truth) -> float:
    """Size of the symmetric difference divided by the number of true edges."""
    est = frozenset(make_edge(*e) for e in estimated)
    tru = frozenset(make_edge(*e) for e in truth)
    if not tru:
        raise EmptyTruth("the true edge set is empty; error is undefined")
    return len(est ^ tru) / len(tru)


def learn_topology(panel: TimeSeriesPanel, lag_order: int = DEFAULT_LAG_ORDER,
                   gamma: float = 0.0, rho: float = DEFAULT_RHO, tau: float = DEFAULT_TAU,
                   grid=None, phase_snr: float = DEFAULT_PHASE_SNR,
                   magnitude_floor: float = DEFAULT_MAGNITUDE_FLOOR,
                   truth=None, workers: int = 1) -> GraphEstimate:
    """Fit all Wiener filters, build the moral graph and prune two-hop links."""
    if rho <= 0 or tau <= 0:
        raise ValueError("rho and tau must be positive")
    grid = _grid(grid)
    bank = fit_all(panel, lag_order, gamma, workers=workers)
    est = estimate_from_bank(bank, grid, rho, tau, phase_snr, magnitude_floor)
    est.params.update(lag_order=lag_order, gamma=gamma, n_samples=panel.n_samples)
    if truth is not None:
        est.error = reconstruction_error(est.pruned_edges, truth)
    return est


def estimate_from_bank(bank, grid=None, rho: float = DEFAULT_RHO, tau: float = DEFAULT_TAU,
                       phase_snr: float = DEFAULT_PHASE_SNR,
                       magnitude_floor: float = DEFAULT_MAGNITUDE_FLOOR) -> GraphEstimate:
    grid = _grid(grid)
    moral = moral_graph(bank, grid, rho)
    edges, removed, diags = prune_two_hop(moral, bank, grid, tau, phase_snr, magnitude_floor)
    params = {
        "rho": rho,
        "tau": tau,
        "grid_size": len(grid),
        "phase_snr": phase_snr,
        "magnitude_floor": magnitude_floor,
    }
    return GraphEstimate(moral, edges, diags, removed, tuple(bank.node_labels), params,
                         bank=bank if isinstance(bank, FilterBank) else None)

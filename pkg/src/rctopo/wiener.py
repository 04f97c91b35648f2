"""Finite-lag multivariate (non-causal) Wiener filter estimation.

For a target node ``j`` the filter regresses ``T_j(k)`` on ``T_i(k - L)`` for
every other node ``i`` and every lag ``L`` in ``-F..F``. Coefficients are
stored as ``coefficients[j, i, L + F]`` and the frequency response is
``W_ji(e^{iw}) = sum_L h_ji^L e^{-iwL}``.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InsufficientSamples, RcTopoError, UnknownPair
from .lasso import lasso_cd
from .simulate import TimeSeriesPanel

DEFAULT_LAG_ORDER = 10
DEFAULT_GRID_SIZE = 64
JITTER = 1e-10
MAX_CONDITION = 1e12
_CHUNK = 16384


@dataclass(frozen=True)
class FrequencyGrid:
    omegas: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        if w.size == 0:
            raise ValueError("frequency grid is empty")
        if np.any(w < 0) or np.any(w > np.pi):
            raise ValueError("grid frequencies must lie in [0, pi]")
        if np.any(np.diff(w) <= 0):
            raise ValueError("grid frequencies must be strictly increasing")
        object.__setattr__(self, "omegas", w)

    @classmethod
    def uniform(cls, size: int = DEFAULT_GRID_SIZE) -> "FrequencyGrid":
        if size < 1:
            raise ValueError("grid size must be >= 1")
        return cls(np.linspace(0.0, np.pi, size) if size > 1 else np.zeros(1))

    def __len__(self):
        return self.omegas.size

    def __array__(self, dtype=None, copy=None):
        return self.omegas if dtype is None else self.omegas.astype(dtype)


def _omegas(grid) -> np.ndarray:
    if isinstance(grid, FrequencyGrid):
        return grid.omegas
    return FrequencyGrid(grid).omegas


def fourier_matrix(omegas, lag_order: int) -> np.ndarray:
    lags = np.arange(-lag_order, lag_order + 1)
    return np.exp(-1j * np.outer(omegas, lags))


@dataclass
class FilterBank:
    """All pairwise filters ``h_ji`` (``j`` target, ``i`` source) of one panel."""

    lag_order: int
    coefficients: np.ndarray
    covariances: Optional[np.ndarray] = None
    node_labels: tuple = ()
    gamma: float = 0.0
    n_samples: int = 0
    sweeps: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        m = self.coefficients.shape[0]
        if self.coefficients.shape != (m, m, 2 * self.lag_order + 1):
            raise ValueError(f"coefficient array has shape {self.coefficients.shape}")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("non-finite filter coefficients")
        if not self.node_labels:
            self.node_labels = tuple(str(k + 1) for k in range(m))

    @property
    def m(self) -> int:
        return self.coefficients.shape[0]

    def pairs(self) -> list[tuple[int, int]]:
        return [(j, i) for j in range(self.m) for i in range(self.m) if i != j]

    def _check_pair(self, j, i):
        if not (0 <= j < self.m and 0 <= i < self.m) or i == j:
            raise UnknownPair(f"no filter for pair ({j}, {i}) in a {self.m}-node bank")

    def taps(self, j: int, i: int) -> np.ndarray:
        self._check_pair(j, i)
        return self.coefficients[j, i]

    def response(self, j: int, i: int, grid) -> np.ndarray:
        return fourier_matrix(_omegas(grid), self.lag_order) @ self.taps(j, i)

    def response_stderr(self, j: int, i: int, grid) -> np.ndarray:
        """Standard error of ``|W_ji|`` error per frequency (zeros if unknown)."""
        self._check_pair(j, i)
        w = _omegas(grid)
        if self.covariances is None:
            return np.zeros(w.size)
        V = fourier_matrix(w, self.lag_order)
        cov = self.covariances[j, i]
        return np.sqrt(np.maximum(np.real(np.einsum("wl,lk,wk->w", V.conj(), cov, V)), 0.0))

    def to_dict(self) -> dict:
        F = self.lag_order
        return {
            "lag_order": F,
            "gamma": self.gamma,
            "n_samples": self.n_samples,
            "node_labels": list(self.node_labels),
            "lags": list(range(-F, F + 1)),
            "pairs": [
                {
                    "target": self.node_labels[j],
                    "source": self.node_labels[i],
                    "coefficients": self.coefficients[j, i].tolist(),
                }
                for j, i in self.pairs()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FilterBank":
        labels = tuple(data["node_labels"])
        F = int(data["lag_order"])
        m = len(labels)
        index = {lab: k for k, lab in enumerate(labels)}
        coef = np.zeros((m, m, 2 * F + 1))
        for p in data["pairs"]:
            coef[index[p["target"]], index[p["source"]]] = p["coefficients"]
        return cls(F, coef, None, labels, float(data.get("gamma", 0.0)), int(data.get("n_samples", 0)))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "FilterBank":
        return cls.from_dict(json.loads(Path(path).read_text()))


def freq_response(bank: FilterBank, j: int, i: int, grid) -> np.ndarray:
    return bank.response(j, i, grid)


def h_inf_norm(bank: FilterBank, j: int, i: int, grid) -> float:
    """Peak magnitude of ``W_ji`` over the grid."""
    return float(np.max(np.abs(bank.response(j, i, grid))))


def default_gamma(m: int, lag_order: int, n_samples: int) -> float:
    return 0.1 * math.sqrt(math.log(m * (2 * lag_order + 1)) / n_samples)


def min_samples(m: int, lag_order: int) -> int:
    """Smallest admissible sample count (strictly above 4 m (2F+1))."""
    return 4 * m * (2 * lag_order + 1) + 1


def max_lag_order(m: int, n_samples: int) -> int:
    """Largest lag order the sample count supports, or -1 if none does."""
    width = (n_samples - 1) // (4 * m)
    return (width - 1) // 2 if width >= 1 else -1


@dataclass
class LaggedMoments:
    """Second moments of the centered, lag-expanded panel.

    Column ``i * (2F+1) + (L + F)`` is ``T_i(k - L)`` for
    ``k = F .. N-1-F``.
    """

    gram: np.ndarray
    lag_order: int
    m: int
    n_rows: int

    @classmethod
    def from_panel(cls, panel: TimeSeriesPanel, lag_order: int) -> "LaggedMoments":
        T = panel.values - panel.values.mean(axis=1, keepdims=True)
        m, N = T.shape
        F = lag_order
        width = 2 * F + 1
        # window w holds T_i(k' .. k'+2F); reversed, position L+F is T_i(k - L)
        windows = [sliding_window_view(T[i], width)[:, ::-1] for i in range(m)]
        n = N - 2 * F
        p = m * width
        gram = np.zeros((p, p))
        for start in range(0, n, _CHUNK):
            stop = min(start + _CHUNK, n)
            X = np.concatenate([w[start:stop] for w in windows], axis=1)
            gram += X.T @ X
        gram /= n
        return cls(gram=gram, lag_order=F, m=m, n_rows=n)

    def block(self, i: int) -> slice:
        width = 2 * self.lag_order + 1
        return slice(i * width, (i + 1) * width)

    def column(self, i: int, lag: int) -> int:
        return i * (2 * self.lag_order + 1) + lag + self.lag_order


@dataclass
class WienerFit:
    target: int
    coefficients: np.ndarray
    covariances: np.ndarray
    residual_variance: float
    sweeps: int = 0
    converged: bool = True


def _solve_spd(G, c):
    """Cholesky solve with a trace-scaled ridge when ``G`` is near singular."""
    try:
        if np.linalg.cond(G) > MAX_CONDITION:
            raise np.linalg.LinAlgError("ill-conditioned")
        fac = scipy.linalg.cho_factor(G)
    except np.linalg.LinAlgError:
        G = G + JITTER * np.trace(G) * np.eye(G.shape[0])
        fac = scipy.linalg.cho_factor(G)
    return scipy.linalg.cho_solve(fac, c), scipy.linalg.cho_solve(fac, np.eye(G.shape[0]))


def _check_samples(panel: TimeSeriesPanel, lag_order: int) -> None:
    if lag_order < 0:
        raise ValueError("lag order must be non-negative")
    need = min_samples(panel.m, lag_order)
    if panel.n_samples < need:
        raise InsufficientSamples(
            f"{panel.n_samples} samples; lag order {lag_order} on {panel.m} nodes needs >= {need}"
        )


def fit_wiener(panel: TimeSeriesPanel, target: int, lag_order: int = DEFAULT_LAG_ORDER,
               gamma: float = 0.0, moments: Optional[LaggedMoments] = None,
               tol: float = 1e-8, max_sweeps: int = 10_000) -> WienerFit:
    """Estimate the filters predicting node ``target`` from all other nodes.

    ``gamma == 0`` solves the normal equations; ``gamma > 0`` adds an L1
    penalty on every coefficient and uses coordinate descent.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    m = panel.m
    if not 0 <= target < m:
        raise IndexError(f"target {target} outside 0..{m - 1}")
    if moments is None:
        _check_samples(panel, lag_order)
        moments = LaggedMoments.from_panel(panel, lag_order)
    F = moments.lag_order
    width = 2 * F + 1
    sources = [i for i in range(m) if i != target]
    idx = np.concatenate([np.arange(moments.block(i).start, moments.block(i).stop) for i in sources])
    y = moments.column(target, 0)
    G = moments.gram[np.ix_(idx, idx)]
    c = moments.gram[idx, y]
    yy = moments.gram[y, y]

    h_ols, G_inv = _solve_spd(G, c)
    if gamma == 0:
        h, sweeps, converged = h_ols, 0, True
    else:
        res = lasso_cd(G, c, gamma, tol=tol, max_sweeps=max_sweeps, const=yy)
        h, sweeps, converged = res.coef, res.sweeps, res.converged
    resid = max(float(yy - 2.0 * c @ h + h @ G @ h), 0.0)

    coef = np.zeros((m, width))
    cov = np.zeros((m, width, width))
    full_cov = resid * G_inv / moments.n_rows
    for a, i in enumerate(sources):
        sl = slice(a * width, (a + 1) * width)
        coef[i] = h[sl]
        cov[i] = full_cov[sl, sl]
    return WienerFit(target, coef, cov, resid, sweeps, converged)


def fit_all(panel: TimeSeriesPanel, lag_order: int = DEFAULT_LAG_ORDER, gamma: float = 0.0,
            workers: int = 1, tol: float = 1e-8, max_sweeps: int = 10_000) -> FilterBank:
    """Fit the Wiener filter of every node and assemble the bank."""
    _check_samples(panel, lag_order)
    moments = LaggedMoments.from_panel(panel, lag_order)

    def one(j):
        try:
            return fit_wiener(panel, j, lag_order, gamma, moments, tol, max_sweeps)
        except RcTopoError as exc:
            raise type(exc)(f"node {panel.node_labels[j]}: {exc}") from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fits = list(pool.map(one, range(panel.m)))
    else:
        fits = [one(j) for j in range(panel.m)]
    m, width = panel.m, 2 * lag_order + 1
    coef = np.zeros((m, m, width))
    cov = np.zeros((m, m, width, width))
    for f in fits:
        coef[f.target] = f.coefficients
        cov[f.target] = f.covariances
    return FilterBank(lag_order, coef, cov, panel.node_labels, gamma, panel.n_samples,
                      {panel.node_labels[f.target]: f.sweeps for f in fits})

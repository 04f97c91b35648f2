"""Comparison methods: one-step-ahead lasso regression and the graphical lasso."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples, NonConvergence
from .lasso import lasso_cd
from .simulate import TimeSeriesPanel
from .topology import reconstruction_error

DEFAULT_THRESHOLD = 0.05
DEFAULT_REGRESSION_GAMMA = 0.0
DEFAULT_GLASSO_LAMBDA = 0.05
THRESHOLD_SWEEP = (0.001, 0.002, 0.005, 0.01, 0.02, 0.03, 0.05, 0.1, 0.2, 0.5)


def threshold_edges(M, threshold: float) -> frozenset:
    """Unordered off-diagonal pairs where either ``|M[i,j]|`` or ``|M[j,i]|`` exceeds the threshold."""
    M = np.abs(np.asarray(M))
    m = M.shape[0]
    return frozenset(
        (i, j) for i in range(m) for j in range(i + 1, m) if max(M[i, j], M[j, i]) > threshold
    )


@dataclass
class RegressionFit:
    coefficients: np.ndarray
    gamma: float
    threshold: float

    @property
    def edges(self) -> frozenset:
        return threshold_edges(self.coefficients, self.threshold)

    def edges_at(self, threshold: float) -> frozenset:
        return threshold_edges(self.coefficients, threshold)


def fit_regression(panel: TimeSeriesPanel, gamma: float = DEFAULT_REGRESSION_GAMMA,
                   threshold: float = DEFAULT_THRESHOLD) -> RegressionFit:
    """Regress every ``T_j(k)`` on all ``T_i(k-1)`` (self term included).

    Coefficient ``[j, i]`` multiplies ``T_i(k-1)`` in the model of node ``j``.
    The L1 penalty ``gamma`` applies to each scalar coefficient.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    T = panel.values - panel.values.mean(axis=1, keepdims=True)
    m, N = T.shape
    if N < max(2, m + 1):
        raise InsufficientSamples(f"{N} samples cannot support a lag-1 regression on {m} nodes")
    X, Y = T[:, :-1], T[:, 1:]
    n = N - 1
    G = X @ X.T / n
    C = Y @ X.T / n
    yy = np.einsum("jk,jk->j", Y, Y) / n
    H = np.zeros((m, m))
    for j in range(m):
        if gamma == 0:
            H[j] = np.linalg.lstsq(X.T, Y[j], rcond=None)[0]
        else:
            H[j] = lasso_cd(G, C[j], gamma, const=yy[j]).coef
    return RegressionFit(H, gamma, threshold)


@dataclass
class GlassoFit:
    covariance: np.ndarray
    precision: np.ndarray
    lam: float
    threshold: float
    sweeps: int = 0

    @property
    def edges(self) -> frozenset:
        return threshold_edges(self.precision, self.threshold)

    def edges_at(self, threshold: float) -> frozenset:
        return threshold_edges(self.precision, threshold)


def graphical_lasso(S, lam: float, tol: float = 1e-6, max_sweeps: int = 10_000):
    """Block coordinate descent for ``-logdet P + tr(S P) + lam * sum_{i!=j} |P_ij|``.

    Each column of the working covariance ``W`` is updated by a lasso
    sub-problem; the diagonal is not penalized (``W_ii = S_ii``). Stops when
    a full sweep moves no entry of ``W`` by more than ``tol``.

    Returns ``(covariance, precision, sweeps)``.
    """
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    if lam <= 0:
        raise ValueError("lambda must be positive")
    W = S.copy()
    beta = np.zeros((p, p - 1))
    others = [np.array([k for k in range(p) if k != j]) for j in range(p)]
    for sweep in range(1, max_sweeps + 1):
        W_old = W.copy()
        for j in range(p):
            o = others[j]
            W11 = W[np.ix_(o, o)]
            s12 = S[o, j]
            # 1/2 b'W11 b - s12'b + lam|b|  ==  1/2 (b'W11 b - 2 s12'b + 2 lam|b|)
            res = lasso_cd(W11, s12, 2.0 * lam, h0=beta[j], tol=tol * 1e-2, max_sweeps=max_sweeps)
            beta[j] = res.coef
            w12 = W11 @ res.coef
            W[o, j] = w12
            W[j, o] = w12
        if np.max(np.abs(W - W_old)) < tol:
            break
    else:
        raise NonConvergence(f"graphical lasso did not converge in {max_sweeps} sweeps")
    P = np.zeros((p, p))
    for j in range(p):
        o = others[j]
        pjj = 1.0 / (W[j, j] - W[o, j] @ beta[j])
        P[j, j] = pjj
        P[o, j] = -beta[j] * pjj
    P = 0.5 * (P + P.T)
    return W, P, sweep


def fit_glasso(panel: TimeSeriesPanel, lam: float = DEFAULT_GLASSO_LAMBDA,
               threshold: float = DEFAULT_THRESHOLD) -> GlassoFit:
    """Sparse precision of the panel columns treated as i.i.d. vectors."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if panel.n_samples < 2:
        raise InsufficientSamples("need at least two samples for a covariance")
    S = np.cov(panel.values, bias=True)
    S = np.atleast_2d(S)
    W, P, sweeps = graphical_lasso(S, lam)
    return GlassoFit(S, P, lam, threshold, sweeps)


def best_over_thresholds(fit, truth, thresholds=THRESHOLD_SWEEP):
    """Lowest reconstruction error over a threshold sweep: ``(error, threshold)``."""
    scored = [(reconstruction_error(fit.edges_at(t), truth), t) for t in thresholds]
    return min(scored, key=lambda s: (s[0], s[1]))

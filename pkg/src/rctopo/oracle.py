"""Exact Wiener filters of a known network, evaluated frequency by frequency.

With ``S_j(z) = z - a_jj`` the network obeys ``T = H T + E`` where
``H_ji = a_ji / S_j`` off the diagonal and ``E_j = p_j / S_j`` has spectrum
``Phi_pj / |S_j|^2``. The inverse temperature spectrum is then
``(I - H)^* Phi_E^{-1} (I - H)`` and the non-causal Wiener filter of target
``j`` on source ``i`` is ``-inv(Phi_T)[j, i] / inv(Phi_T)[j, j]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularAtFrequency, UnknownPair
from .network import DiscreteDynamics, edge_set, neighbors, two_hop_neighbors
from .simulate import NoisePlan
from .wiener import _omegas

MAX_CONDITION = 1e12
NORMALIZATIONS = ("exact", "input")


@dataclass(frozen=True)
class ZDomainModel:
    A: np.ndarray
    plan: NoisePlan
    node_labels: tuple = ()

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if self.plan.m != A.shape[0]:
            raise ValueError(f"noise plan covers {self.plan.m} nodes, A has {A.shape[0]}")
        self.plan.check()
        object.__setattr__(self, "A", A)
        if not self.node_labels:
            object.__setattr__(self, "node_labels", tuple(str(k + 1) for k in range(A.shape[0])))

    @classmethod
    def from_dynamics(cls, dyn: DiscreteDynamics, plan: NoisePlan, node_labels=()) -> "ZDomainModel":
        return cls(dyn.A, plan, tuple(node_labels))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def edges(self) -> frozenset:
        m = self.m
        return edge_set(
            (i, j) for i in range(m) for j in range(i + 1, m) if self.A[i, j] != 0 or self.A[j, i] != 0
        )

    def S(self, omega: float) -> np.ndarray:
        return np.exp(1j * omega) - np.diag(self.A)

    def input_psd(self, omega: float) -> np.ndarray:
        return self.plan.psd([omega])[:, 0]

    def transfer(self, omega: float) -> np.ndarray:
        H = self.A / self.S(omega)[:, None]
        np.fill_diagonal(H, 0.0)
        return H


def analytic_spectrum_inverse(model: ZDomainModel, omega: float) -> np.ndarray:
    """``inv(Phi_T)(e^{i omega})`` as an m x m Hermitian matrix."""
    phi_p = model.input_psd(omega)
    if np.any(phi_p <= 0):
        raise SingularAtFrequency(f"input spectrum not positive at omega={omega}")
    S = model.S(omega)
    IH = np.eye(model.m) - model.transfer(omega)
    cond = np.linalg.cond(IH)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularAtFrequency(f"I - H is singular at omega={omega} (cond={cond:.3g})")
    phi_e_inv = np.abs(S) ** 2 / phi_p
    K = IH.conj().T @ (phi_e_inv[:, None] * IH)
    return 0.5 * (K + K.conj().T)


def analytic_wiener(model: ZDomainModel, j: int, i: int, grid,
                    normalization: str = "exact") -> np.ndarray:
    """Response of the exact non-causal Wiener filter ``W_ji`` on the grid.

    ``normalization="exact"`` divides by ``inv(Phi_T)[j, j]`` and is what a
    least-squares fit converges to. ``"input"`` multiplies by the filtered
    input spectrum ``Phi_Ej`` instead; it has the same support and phase but
    different magnitude.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    if not (0 <= j < model.m and 0 <= i < model.m) or i == j:
        raise UnknownPair(f"no filter for pair ({j}, {i}) in a {model.m}-node model")
    out = []
    for w in _omegas(grid):
        K = analytic_spectrum_inverse(model, w)
        if normalization == "exact":
            out.append(-K[j, i] / K[j, j].real)
        else:
            phi_e = model.input_psd(w)[j] / np.abs(model.S(w)[j]) ** 2
            out.append(-K[j, i] * phi_e)
    return np.array(out)


@dataclass
class AnalyticBank:
    """Exact filters for every ordered pair, usable wherever a fitted bank is.

    Responses are computed for one grid at a time and cached.
    """

    model: ZDomainModel
    normalization: str = "exact"
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return self.model.m

    @property
    def node_labels(self) -> tuple:
        return self.model.node_labels

    def pairs(self):
        return [(j, i) for j in range(self.m) for i in range(self.m) if i != j]

    def _table(self, grid) -> np.ndarray:
        w = _omegas(grid)
        key = w.tobytes()
        if key not in self._cache:
            table = np.zeros((self.m, self.m, w.size), dtype=complex)
            for k, omega in enumerate(w):
                K = analytic_spectrum_inverse(self.model, omega)
                if self.normalization == "exact":
                    scale = 1.0 / K.diagonal().real
                else:
                    scale = self.model.input_psd(omega) / np.abs(self.model.S(omega)) ** 2
                table[:, :, k] = -K * scale[:, None]
            for j in range(self.m):
                table[j, j] = 0.0
            self._cache = {key: table}
        return self._cache[key]

    def response(self, j: int, i: int, grid) -> np.ndarray:
        if not (0 <= j < self.m and 0 <= i < self.m) or i == j:
            raise UnknownPair(f"no filter for pair ({j}, {i})")
        return self._table(grid)[j, i]

    def response_stderr(self, j: int, i: int, grid) -> np.ndarray:
        return np.zeros(_omegas(grid).size)


def pair_relation(model: ZDomainModel, j: int, i: int) -> str:
    """One of ``neighbor``, ``neighbor_and_two_hop``, ``strict_two_hop``, ``unrelated``."""
    edges = model.edges()
    nbr = neighbors(edges, model.m)
    hop2 = two_hop_neighbors(edges, model.m)
    one, two = i in nbr[j], i in hop2[j]
    if one and two:
        return "neighbor_and_two_hop"
    if one:
        return "neighbor"
    if two:
        return "strict_two_hop"
    return "unrelated"


@dataclass
class PhaseConditionReport:
    """Per-frequency evaluation of the conditions under which a true edge has phase pi.

    ``real_part`` and ``imag_part`` hold the two expressions checked at each
    frequency; ``holds`` marks frequencies where both conditions are met.
    A pair is pathological only if they hold at every frequency.
    """

    j: int
    i: int
    relation: str
    omegas: np.ndarray
    real_part: np.ndarray
    imag_part: np.ndarray
    holds: np.ndarray

    @property
    def pathological(self) -> bool:
        return self.relation.startswith("neighbor") and bool(np.all(self.holds))

    @property
    def violated_at(self) -> np.ndarray:
        return self.omegas[~self.holds]

    def to_dict(self) -> dict:
        return {
            "pair": [self.j, self.i],
            "relation": self.relation,
            "pathological": self.pathological,
            "frequencies_where_conditions_hold": int(self.holds.sum()),
            "grid_size": int(self.omegas.size),
        }


def check_theorem3_conditions(model: ZDomainModel, j: int, i: int, grid,
                              imag_tol: float = 1e-12) -> PhaseConditionReport:
    """Evaluate, per frequency, the phase-pi conditions for neighboring nodes.

    With ``X = -a_ji conj(S_j) / Phi_pj - a_ij S_i / Phi_pi`` the conditions
    are ``Imag(X) = 0`` together with ``Real(X) > 0`` for plain neighbors, or
    ``Real(X) + sum_k a_kj a_ki / Phi_pk > 0`` (common neighbors ``k``) when
    the pair is also two hops apart. For other relations nothing holds.
    """
    w = _omegas(grid)
    relation = pair_relation(model, j, i)
    A = model.A
    edges = model.edges()
    nbr = neighbors(edges, model.m)
    common = sorted(nbr[j] & nbr[i])
    re = np.zeros(w.size)
    im = np.zeros(w.size)
    for k, omega in enumerate(w):
        S = model.S(omega)
        phi = model.input_psd(omega)
        X = -A[j, i] * np.conj(S[j]) / phi[j] - A[i, j] * S[i] / phi[i]
        re[k] = X.real
        im[k] = X.imag
        if relation == "neighbor_and_two_hop":
            re[k] += sum(A[c, j] * A[c, i] / phi[c] for c in common)
    scale = max(1.0, float(np.max(np.abs(re))))
    if relation.startswith("neighbor"):
        holds = (np.abs(im) <= imag_tol * scale) & (re > 0)
    else:
        holds = np.zeros(w.size, dtype=bool)
    return PhaseConditionReport(j, i, relation, w, re, im, holds)

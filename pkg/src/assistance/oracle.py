"""Brute-force maximizers over pure-state decompositions and rank-1 POVMs.

These are the reference values for E_a and tau_a. They evaluate members
directly (I-concurrence through the S_mn operators, or linear entropy of a
post-measurement reduction) and never touch the A-matrix/trace-norm route of
:mod:`assistance.bounds`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import _ascent
from .base import StateEstimator
from .measures import i_concurrence, linear_entropy, s_operators
from .qstate import RANK_CUTOFF, QState, StateError, check_state, partial_trace, permute, spectral

ISOMETRY_ATOL = 1e-10


@dataclass
class OracleConfig:
    restarts: int = 64
    k: int | str = "auto"
    max_evals: int = 2000
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "OracleConfig":
        return cls(**{key: d[key] for key in ("restarts", "k", "max_evals", "seed") if key in d})

    def to_dict(self) -> dict:
        return asdict(self)

    def escalated(self, factor: int) -> "OracleConfig":
        return OracleConfig(self.restarts * factor, self.k, self.max_evals, self.seed)

    def members(self, r: int, dims: tuple[int, ...] = ()) -> int:
        """Ensemble size: r members suffice when one party is a qubit, r^2 otherwise."""
        if self.k in ("auto", None):
            return r if dims and min(dims) <= 2 else r * r
        return max(int(self.k), r)


@dataclass
class Ensemble:
    probabilities: np.ndarray
    members: np.ndarray  # (k, n) normalized rows
    U: np.ndarray
    dims: tuple[int, ...]

    def density_matrix(self) -> np.ndarray:
        return np.einsum("i,ia,ib->ab", self.probabilities, self.members, self.members.conj())

    def __len__(self) -> int:
        return len(self.probabilities)


@dataclass
class OracleResult:
    value: float
    best_ensemble: Ensemble | None
    k_used: int
    restarts_run: int
    converged: bool
    restart_values: np.ndarray

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "k_used": self.k_used,
            "restarts_run": self.restarts_run,
            "converged": self.converged,
            "restart_values": [float(v) for v in np.sort(self.restart_values)[::-1][:8]],
        }


def _check_isometry(U: np.ndarray, r: int) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[1] != r or U.shape[0] < r:
        raise StateError(f"U must be k x {r} with k >= {r}, got shape {U.shape}")
    err = np.max(np.abs(U.conj().T @ U - np.eye(r)))
    if err > ISOMETRY_ATOL:
        raise StateError(f"U is not an isometry (max |U^H U - I| = {err:.3g})")
    return U


def _support(rho) -> tuple[np.ndarray, QState]:
    """X = Psi M^1/2 restricted to eigenvalues above the rank cutoff."""
    rho = check_state(rho)
    mu, psi = spectral(rho.dm()).support(RANK_CUTOFF)
    return psi * np.sqrt(mu), rho


def decompose(rho, U) -> Ensemble:
    """Ensemble with unnormalized members sum_j U_ij sqrt(mu_j) |psi_j>."""
    X, rho = _support(rho)
    U = _check_isometry(U, X.shape[1])
    Phi = U @ X.T
    p = np.sum(np.abs(Phi) ** 2, axis=1)
    keep = p >= 1e-14
    members = Phi[keep] / np.sqrt(p[keep])[:, None]
    return Ensemble(p[keep], members, U, rho.dims)


def ensemble_value(ens: Ensemble, objective: str = "tangle") -> float:
    """Direct evaluation of sum p_i C(phi_i) or sum p_i C(phi_i)^2."""
    total = 0.0
    for p, v in zip(ens.probabilities, ens.members):
        c = i_concurrence(QState(ens.dims, "pure", v))
        total += p * (c * c if objective == "tangle" else c)
    return float(total)


def _concurrence_members(d1: int, d2: int, objective: str):
    S = s_operators(d1, d2)

    def fn(Phi):
        a = np.einsum("rki,pij,rkj->rkp", Phi, S, Phi)
        Sphi_c = np.einsum("pij,rkj->rkpi", S, Phi.conj())
        sq = np.sum(np.abs(a) ** 2, axis=-1)
        if objective == "tangle":
            q = np.sum(np.abs(Phi) ** 2, axis=-1)
            qs = np.where(q > 1e-300, q, 1.0)
            f = np.where(q > 1e-300, sq / qs, 0.0)
            g = 2 * np.einsum("rkp,rkpi->rki", a, Sphi_c) / qs[..., None] - (sq / qs**2)[..., None] * Phi
        else:
            f = np.sqrt(sq)
            fs = np.where(f > 1e-300, f, 1.0)
            g = np.einsum("rkp,rkpi->rki", a, Sphi_c) / fs[..., None]
        return f, g

    return fn


def _best(res: _ascent.AscentResult):
    order = np.argsort(-res.values, kind="stable")
    best = int(order[0])
    vals = res.values
    converged = len(vals) < 2 or vals[order[0]] - vals[order[1]] <= 1e-7
    return best, bool(converged)


def _decomposition_oracle(rho, cfg: OracleConfig, objective: str) -> OracleResult:
    X, rho = _support(rho)
    if rho.n != 2:
        raise StateError(f"bipartite state required, got dims {rho.dims}")
    d1, d2 = rho.dims
    r = X.shape[1]
    k = cfg.members(r, rho.dims)
    if d1 < 2 or d2 < 2:
        ens = decompose(rho, np.eye(k, r))
        return OracleResult(0.0, ens, k, 0, True, np.zeros(1))
    fn = _concurrence_members(d1, d2, objective)
    restarts = 1 if r == 1 else cfg.restarts
    res = _ascent.maximize(X, k, fn, restarts, cfg.seed, cfg.max_evals)
    best, converged = _best(res)
    ens = decompose(rho, res.U[best])
    return OracleResult(float(res.values[best]), ens, k, restarts, converged, res.values)


def eoa_oracle(rho, cfg: OracleConfig | None = None) -> OracleResult:
    """Best found sum_i p_i C(phi_i) over decompositions of a bipartite rho."""
    return _decomposition_oracle(rho, cfg or OracleConfig(), "eoa")


def tangle_oracle(rho, cfg: OracleConfig | None = None) -> OracleResult:
    """Best found sum_i p_i C(phi_i)^2 over decompositions of a bipartite rho."""
    return _decomposition_oracle(rho, cfg or OracleConfig(), "tangle")


def _entropy_members(da: int, db: int):
    def fn(Phi):
        shape = Phi.shape
        M = Phi.reshape(shape[:-1] + (da, db))
        q = np.sum(np.abs(Phi) ** 2, axis=-1)
        red = M @ M.conj().swapaxes(-1, -2)
        pur = np.sum(np.abs(red) ** 2, axis=(-1, -2))
        qs = np.where(q > 1e-300, q, 1.0)
        f = np.where(q > 1e-300, 2 * (q - pur / qs), 0.0)
        g = 2 * (M - 2 * (red @ M) / qs[..., None, None] + (pur / qs**2)[..., None, None] * M)
        return f, g.reshape(shape)

    return fn


def povm_tangle_oracle(psi, measured: int, cut=None, cfg: OracleConfig | None = None) -> OracleResult:
    """Best found sum_x p_x S_2(rho_x) over rank-1 POVMs on subsystem ``measured``.

    ``cut`` is ``(side_a, side_b)``: lists of the remaining subsystems forming
    the two parties. ``rho_x`` is the post-measurement reduced state on
    ``side_a``. Defaults to the first remaining subsystem against the rest.
    """
    cfg = cfg or OracleConfig()
    psi = check_state(psi, kind="pure")
    if not 0 <= measured < psi.n:
        raise StateError(f"measured subsystem {measured} out of range for dims {psi.dims}")
    rest = [i for i in range(psi.n) if i != measured]
    if cut is None:
        cut = (rest[:1], rest[1:])
    side_a, side_b = [list(s) for s in cut]
    if sorted(side_a + side_b) != rest or not side_a:
        raise StateError(f"cut {cut} must partition the unmeasured subsystems {rest}")
    st = permute(psi, side_a + side_b + [measured])
    da = int(np.prod([psi.dims[i] for i in side_a]))
    db = int(np.prod([psi.dims[i] for i in side_b])) if side_b else 1
    dm = psi.dims[measured]
    X = st.data.reshape(da * db, dm)
    k = cfg.members(dm)
    fn = _entropy_members(da, db)
    res = _ascent.maximize(X, k, fn, cfg.restarts, cfg.seed, cfg.max_evals)
    best, converged = _best(res)
    V = res.U[best]
    Phi = V @ X.T
    p = np.sum(np.abs(Phi) ** 2, axis=1)
    keep = p >= 1e-14
    ens = Ensemble(p[keep], Phi[keep] / np.sqrt(p[keep])[:, None], V, (da, db))
    return OracleResult(float(res.values[best]), ens, k, cfg.restarts, converged, res.values)


def povm_value(psi: QState, measured: int, side_a, side_b, V) -> float:
    """Direct evaluation of sum_x p_x S_2(rho_x) for POVM elements |v_x><v_x|, <v_x| = V[x]."""
    V = np.asarray(V, dtype=complex)
    total = 0.0
    for row in V:
        # (I (x) <v_x|) psi, then reduce to side_a
        t = np.tensordot(psi.data.reshape(psi.dims), row, axes=([measured], [0]))
        dims = tuple(d for i, d in enumerate(psi.dims) if i != measured)
        p = float(np.sum(np.abs(t) ** 2))
        if p < 1e-14:
            continue
        rest = [i for i in range(psi.n) if i != measured]
        keep = [rest.index(i) for i in side_a]
        post = QState(dims, "pure", t.reshape(-1) / np.sqrt(p))
        total += p * linear_entropy(partial_trace(post, keep))
    return total


class DecompositionOracle(StateEstimator):
    """Maximize the average (squared) I-concurrence over decompositions of rho.

    ``objective`` is ``"tangle"`` (tau_a) or ``"eoa"`` (E_a). Fitted
    attributes: ``value_``, ``ensemble_``, ``result_``.
    """

    def __init__(self, objective="tangle", restarts=64, k="auto", max_evals=2000, seed=0):
        self.objective = objective
        self.restarts = restarts
        self.k = k
        self.max_evals = max_evals
        self.seed = seed

    def fit(self, state, keep=(0, 1)):
        if self.objective not in ("tangle", "eoa"):
            raise ValueError(f"objective must be 'tangle' or 'eoa', got {self.objective!r}")
        state = check_state(state)
        rho = state.to_mixed() if state.n == 2 else partial_trace(state, keep)
        cfg = OracleConfig(self.restarts, self.k, self.max_evals, self.seed)
        self.result_ = _decomposition_oracle(rho, cfg, self.objective)
        self.value_ = self.result_.value
        self.ensemble_ = self.result_.best_ensemble
        return self


class POVMOracle(StateEstimator):
    """Maximize sum_x p_x S_2(rho_x) over rank-1 POVMs on one party of a pure state."""

    def __init__(self, measured=2, cut=None, restarts=64, k="auto", max_evals=2000, seed=0):
        self.measured = measured
        self.cut = cut
        self.restarts = restarts
        self.k = k
        self.max_evals = max_evals
        self.seed = seed

    def fit(self, state):
        cfg = OracleConfig(self.restarts, self.k, self.max_evals, self.seed)
        self.result_ = povm_tangle_oracle(state, self.measured, self.cut, cfg)
        self.value_ = self.result_.value
        return self

"""Lower and upper bounds on the entanglement of assistance.

The lower bound maximizes the trace norm of T(z) = sum_mn z_mn A_mn over
complex unit vectors z, where A_mn = M^1/2 Psi^T S_mn Psi M^1/2 is built on
the support of rho_AB. Every feasible z gives a valid bound, so the optimizer
only has to find a good one.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .base import StateEstimator
from .measures import linear_entropy, s_operators
from .qstate import RANK_CUTOFF, QState, SpectralDecomp, check_state, partial_trace, spectral, sub_seed

_ETA_MAX = 2.0**20


@dataclass
class OptimizerConfig:
    restarts: int = 32
    tol: float = 1e-9
    max_iter: int = 500
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        return cls(**{k: d[k] for k in ("restarts", "tol", "max_iter", "seed") if k in d})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ABlockSet:
    a_matrices: np.ndarray  # (n_pairs, r, r)
    pairs: list[tuple[int, int]]
    source: SpectralDecomp
    dims: tuple[int, int]

    def __len__(self) -> int:
        return len(self.a_matrices)

    def combine(self, z: np.ndarray) -> np.ndarray:
        return np.tensordot(z, self.a_matrices, axes=(-1, 0))


@dataclass
class ZVector:
    entries: np.ndarray

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.entries)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.entries)


@dataclass
class BoundReport:
    lower: float
    upper: float
    best_z: ZVector
    restart_values: np.ndarray
    restart_iterations: np.ndarray
    converged: bool
    history: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def tangle_upper(self) -> float:
        return self.upper**2

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "tangle_upper": self.tangle_upper,
            "converged": self.converged,
            "best_z": [[float(c.real), float(c.imag)] for c in self.best_z.entries],
            "restart_values": [float(v) for v in self.restart_values],
            "restart_iterations": [int(i) for i in self.restart_iterations],
        }


def build_a_blocks(rho_ab, cutoff: float = RANK_CUTOFF) -> ABlockSet:
    """A_mn = M^1/2 Psi^T S_mn Psi M^1/2 on the rank-r support of rho_AB."""
    rho_ab = check_state(rho_ab, n=2)
    d1, d2 = rho_ab.dims
    sd = spectral(rho_ab.dm())
    mu, psi = sd.support(cutoff)
    X = psi * np.sqrt(mu)
    S = s_operators(d1, d2)
    A = np.einsum("ia,mij,jb->mab", X, S, X)
    A = (A + np.transpose(A, (0, 2, 1))) / 2
    n1, n2 = d1 * (d1 - 1) // 2, d2 * (d2 - 1) // 2
    pairs = [(m, n) for m in range(n1) for n in range(n2)]
    return ABlockSet(A, pairs, sd, (d1, d2))


def _objective(blocks: ABlockSet, z: np.ndarray):
    """Trace norms and their subgradients g (df = Re <g, dz>) for a batch of z."""
    T = blocks.combine(z)
    U, s, Vh = np.linalg.svd(T)
    G = U @ Vh
    g = np.einsum("...ij,mij->...m", G, blocks.a_matrices.conj())
    return s.sum(axis=-1), g


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_unit_z(n: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return _unit(rng.standard_normal(n) + 1j * rng.standard_normal(n))


def eoa_lower_bound(blocks: ABlockSet, cfg: OptimizerConfig | None = None, upper: float = np.nan) -> BoundReport:
    """Multi-start projected ascent of ||sum z_mn A_mn||_tr on the unit sphere.

    Restarts run as one vectorized batch; each start comes from its own
    sub-seed so the result does not depend on the restart count ordering.
    """
    cfg = cfg or OptimizerConfig()
    P = len(blocks)
    if P == 1 or blocks.a_matrices.shape[1] == 0:
        z = np.ones(P, dtype=complex) / np.sqrt(P)
        val = float(_objective(blocks, z[None])[0][0])
        return BoundReport(val, upper, ZVector(z), np.array([val]), np.array([0]), True, [np.array([val])])

    R = max(1, int(cfg.restarts))
    z = np.array([random_unit_z(P, sub_seed(cfg.seed, i)) for i in range(R)])
    f, g = _objective(blocks, z)
    eta = np.full(R, _ETA_MAX)
    active = np.ones(R, dtype=bool)
    iters = np.zeros(R, dtype=int)
    history = [f.copy()]
    for _ in range(cfg.max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        gn = np.linalg.norm(g[idx], axis=-1, keepdims=True)
        step = np.where(gn > 0, g[idx] / np.where(gn > 0, gn, 1.0), 0.0)
        cand = _unit(z[idx] + eta[idx, None] * step)
        fc, gc = _objective(blocks, cand)
        better = fc > f[idx]
        acc = idx[better]
        rel = (fc[better] - f[acc]) / np.maximum(np.abs(f[acc]), 1e-300)
        z[acc], f[acc], g[acc] = cand[better], fc[better], gc[better]
        iters[idx] += 1
        eta[acc] = np.minimum(eta[acc] * 2.0, _ETA_MAX)
        rej = idx[~better]
        eta[rej] /= 2.0
        active[acc[rel < cfg.tol]] = False
        active[rej[eta[rej] < 1e-12]] = False
        history.append(f.copy())

    best = int(np.argmax(f))
    top = np.sort(f)[::-1]
    converged = bool(len(top) < 2 or top[0] - top[1] <= 1e-7 * max(1.0, abs(top[0])))
    return BoundReport(float(f[best]), upper, ZVector(z[best].copy()), f.copy(), iters, converged, history)


def evaluate_z(blocks: ABlockSet, z) -> float:
    """Trace norm of sum z_mn A_mn for a given z (any feasible z is a lower bound)."""
    return float(_objective(blocks, np.asarray(z, dtype=complex)[None])[0][0])


def eoa_upper_bound(rho_ab, cut: int = 0) -> tuple[float, float]:
    """(tangle-scale bound 2(1 - Tr rho_A^2), its square root) with A = subsystem ``cut``."""
    rho_ab = check_state(rho_ab, n=2)
    t = linear_entropy(partial_trace(rho_ab, [cut]))
    return t, float(np.sqrt(t))


def reduce_pair(state: QState, keep=(0, 1)) -> QState:
    """Two-party reduced state, e.g. rho_AB of a tripartite pure state."""
    state = check_state(state)
    if state.n == 2 and tuple(keep) == (0, 1):
        return state.to_mixed()
    return partial_trace(state, keep)


class AssistanceBounds(StateEstimator):
    """Lower and upper bounds on the entanglement of assistance of rho_AB.

    ``fit`` accepts a bipartite state, or any multipartite state together with
    ``keep`` naming the two parties of interest (the rest is traced out).

    Attributes
    ----------
    lower_, upper_ : float
        Concurrence-scale bounds.
    tangle_upper_ : float
        2(1 - Tr rho_A^2).
    best_z_ : ndarray
    report_ : BoundReport
    """

    _fitted_attr = "report_"

    def __init__(self, restarts=32, tol=1e-9, max_iter=500, seed=0):
        self.restarts = restarts
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed

    def fit(self, state, keep=(0, 1), cut=0):
        rho = reduce_pair(check_state(state), keep)
        self.blocks_ = build_a_blocks(rho)
        self.tangle_upper_, self.upper_ = eoa_upper_bound(rho, cut)
        cfg = OptimizerConfig(self.restarts, self.tol, self.max_iter, self.seed)
        self.report_ = eoa_lower_bound(self.blocks_, cfg, upper=self.upper_)
        self.lower_ = self.report_.lower
        self.best_z_ = self.report_.best_z.entries
        return self

    @property
    def value_(self):
        self._check_fitted()
        return self.lower_

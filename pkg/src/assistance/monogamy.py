"""Monogamy of the tangle of assistance for n-qubit states.

The inequality checked is

    sum_i tau_a(rho_{head, i})  >=  tau_a(rho_{head | rest}).

Pairwise terms come from the decomposition oracle, which can only
underestimate, so a negative margin is first treated as a search failure:
restarts are doubled (up to 4x), then any pairwise term is replaced by the
closed-form C_a^2 where that is larger. Only what survives is flagged.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .base import StateEstimator
from .measures import concurrence_of_assistance_2q, linear_entropy
from .oracle import OracleConfig, OracleResult, povm_tangle_oracle, tangle_oracle
from .qstate import (
    QState,
    StateError,
    check_state,
    ghz,
    group,
    haar_random_pure,
    partial_trace,
    permute,
    random_mixed,
    spectral,
    sub_seed,
)

VIOLATION_TOL = 1e-6
MAX_QUBITS = 6


@dataclass
class MonogamyReport:
    state_id: str
    n: int
    kind: str
    rank: int
    pairwise: list[float]
    bipartite: float
    quality: bool
    escalation: int = 0
    closed_form_used: list[bool] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)

    @property
    def margin(self) -> float:
        return float(sum(self.pairwise) - self.bipartite)

    @property
    def violation(self) -> bool:
        return self.margin < -VIOLATION_TOL

    def row(self, n_max: int | None = None) -> list:
        n_max = n_max or self.n
        pw = list(self.pairwise) + [""] * (n_max - 1 - len(self.pairwise))
        return [self.state_id, self.n, self.kind, self.rank, *pw, self.bipartite, self.margin, int(self.quality)]

    def to_dict(self) -> dict:
        return {
            "state_id": self.state_id,
            "n": self.n,
            "kind": self.kind,
            "rank": self.rank,
            "pairwise": list(self.pairwise),
            "bipartite": self.bipartite,
            "margin": self.margin,
            "quality": self.quality,
            "escalation": self.escalation,
            "closed_form_used": self.closed_form_used,
            "violation_candidate": self.violation,
            "diagnostics": self.diagnostics,
        }


def csv_header(n_max: int) -> list[str]:
    return ["state_id", "n", "kind", "rank", *[f"pairwise_{i}" for i in range(1, n_max)], "bipartite", "margin", "quality"]


def _check_qubits(state: QState) -> QState:
    state = check_state(state)
    if any(d != 2 for d in state.dims):
        raise StateError(f"n-qubit state required, got dims {state.dims}")
    return state


def bipartite_tangle_assistance(state, head: int = 0, cfg: OracleConfig | None = None) -> float:
    """tau_a across head | rest: S_2(rho_head) for pure states, the oracle otherwise."""
    return _bipartite(state, head, cfg)[0]


def _bipartite(state, head, cfg) -> tuple[float, OracleResult | None]:
    state = check_state(state)
    if state.n < 2:
        raise StateError("need at least two subsystems")
    if not 0 <= head < state.n:
        raise StateError(f"head {head} out of range for {state.n} subsystems")
    if state.is_pure:
        return linear_entropy(partial_trace(state, [head])), None
    rest = [i for i in range(state.n) if i != head]
    res = tangle_oracle(group(state, [[head], rest]), cfg)
    return res.value, res


def pair_state(state: QState, head: int, other: int) -> QState:
    """rho_{head, other} with head as the first party."""
    rho = partial_trace(state, [head, other])
    return rho if head < other else permute(rho, [1, 0])


def _pairwise(state, head, cfg):
    others = [i for i in range(state.n) if i != head]
    return [tangle_oracle(pair_state(state, head, i), cfg) for i in others], others


def monogamy_check(state, head: int = 0, cfg: OracleConfig | None = None, state_id: str = "") -> MonogamyReport:
    state = _check_qubits(state)
    if not 2 <= state.n <= MAX_QUBITS:
        raise StateError(f"monogamy check supports 2..{MAX_QUBITS} qubits, got {state.n}")
    cfg = cfg or OracleConfig()
    bip, bip_res = _bipartite(state, head, cfg)
    results, others = _pairwise(state, head, cfg)
    escalation = 1
    while sum(r.value for r in results) - bip < -VIOLATION_TOL and escalation < 4:
        escalation *= 2
        results, others = _pairwise(state, head, cfg.escalated(escalation))
    pairwise = [r.value for r in results]
    used = [False] * len(pairwise)
    if sum(pairwise) - bip < -VIOLATION_TOL:
        for j, i in enumerate(others):
            ca = concurrence_of_assistance_2q(pair_state(state, head, i))
            if ca * ca > pairwise[j]:
                pairwise[j] = ca * ca
                used[j] = True
    quality = all(r.converged for r in results) and (bip_res is None or bip_res.converged)
    rank = 1 if state.is_pure else spectral(state.dm()).rank()
    diags = [dict(pair=[head, i], **r.to_dict()) for i, r in zip(others, results)]
    if bip_res is not None:
        diags.append(dict(pair=[head, "rest"], **bip_res.to_dict()))
    return MonogamyReport(
        state_id or "state",
        state.n,
        state.kind,
        rank,
        pairwise,
        bip,
        quality,
        escalation if escalation > 1 else 0,
        used,
        diags,
    )


@dataclass
class StepReport:
    tau_ab: float
    tau_ac_povm: float
    tau_ac_decomposition: float
    bipartite: float

    @property
    def tau_ac(self) -> float:
        return max(self.tau_ac_povm, self.tau_ac_decomposition)

    @property
    def route_gap(self) -> float:
        return abs(self.tau_ac_povm - self.tau_ac_decomposition)

    @property
    def margin(self) -> float:
        return self.tau_ab + self.tau_ac - self.bipartite


def tripartite_step_check(state, cfg: OracleConfig | None = None) -> StepReport:
    """tau_a(AB) + tau_a(AC) >= tau_a(A|BC) for a pure 2 x 2 x 2^m state (m <= 3).

    tau_a(AC) is computed twice: by rank-1 POVMs on B and by decompositions
    of rho_AC.
    """
    state = check_state(state, kind="pure")
    dims = state.dims
    if len(dims) != 3 or dims[0] != 2 or dims[1] != 2 or dims[2] not in (2, 4, 8):
        raise StateError(f"expected dims (2, 2, 2^m) with m <= 3, got {dims}")
    tau_ab = tangle_oracle(partial_trace(state, [0, 1]), cfg).value
    tau_ac_dec = tangle_oracle(partial_trace(state, [0, 2]), cfg).value
    tau_ac_povm = povm_tangle_oracle(state, measured=1, cut=([0], [2]), cfg=cfg).value
    return StepReport(tau_ab, tau_ac_povm, tau_ac_dec, float(linear_entropy(partial_trace(state, [0]))))


def schmidt_compress(state, subsystem: int, cutoff: float = 1e-12) -> QState:
    """Rotate ``subsystem`` into the eigenbasis of its reduction and drop empty directions."""
    state = check_state(state)
    if not state.is_pure:
        raise StateError("schmidt_compress needs a pure state")
    if not 0 <= subsystem < state.n:
        raise StateError(f"subsystem {subsystem} out of range for dims {state.dims}")
    order = [i for i in range(state.n) if i != subsystem] + [subsystem]
    st = permute(state, order)
    M = st.data.reshape(-1, state.dims[subsystem])
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    keep = s**2 > cutoff
    M2 = U[:, keep] * s[keep]
    M2 /= np.linalg.norm(M2)
    dims = list(st.dims[:-1]) + [int(keep.sum())]
    compressed = QState(tuple(dims), "pure", M2.reshape(-1))
    back = [0] * state.n
    for new_pos, old in enumerate(order):
        back[old] = new_pos
    return permute(compressed, back)


# ---------------------------------------------------------------------------
# Campaigns


def campaign_state(kind: str, n: int, index: int, seed: int, rank: int = 2, theta: float | None = None) -> QState:
    """State ``index`` of a campaign; depends only on (seed, index)."""
    if kind == "pure":
        return haar_random_pure((2,) * n, sub_seed(seed, index))
    if kind == "mixed":
        return random_mixed((2,) * n, rank, sub_seed(seed, index))
    if kind == "ghz":
        return ghz(n, np.pi / 4 if theta is None else theta)
    if kind == "product":
        from .qstate import product

        return product(*[haar_random_pure((2,), sub_seed(seed, index, q)) for q in range(n)])
    raise ValueError(f"unknown campaign kind {kind!r}")


def _campaign_job(args):
    kind, n, index, seed, rank, theta, head, cfg = args
    st = campaign_state(kind, n, index, seed, rank, theta)
    return monogamy_check(st, head, cfg, state_id=f"{kind}-{n}-{seed}-{index}")


def run_campaign(
    kind: str,
    n: int,
    count: int,
    seed: int = 0,
    rank: int = 2,
    head: int = 0,
    cfg: OracleConfig | None = None,
    jobs: int = 1,
    theta: float | None = None,
) -> list[MonogamyReport]:
    """Monogamy reports for ``count`` campaign states, ordered by state index."""
    cfg = cfg or OracleConfig()
    tasks = [(kind, n, i, seed, rank, theta, head, cfg) for i in range(count)]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_campaign_job, tasks, chunksize=max(1, count // (4 * jobs))))
    return [_campaign_job(t) for t in tasks]


class MonogamyVerifier(StateEstimator):
    """Evaluate the monogamy inequality on one n-qubit state.

    Fitted attributes: ``report_``, ``margin_``, ``pairwise_``, ``bipartite_``.
    """

    _fitted_attr = "report_"

    def __init__(self, head=0, restarts=64, k="auto", max_evals=2000, seed=0):
        self.head = head
        self.restarts = restarts
        self.k = k
        self.max_evals = max_evals
        self.seed = seed

    def fit(self, state):
        cfg = OracleConfig(self.restarts, self.k, self.max_evals, self.seed)
        self.report_ = monogamy_check(state, self.head, cfg)
        self.margin_ = self.report_.margin
        self.pairwise_ = list(self.report_.pairwise)
        self.bipartite_ = self.report_.bipartite
        return self

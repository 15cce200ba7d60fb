"""Qubit-channel picture of a two-qubit state.

A two-qubit rho_AB with full-rank rho_B is written as (Lambda (x) I)|V><V|
where |V> = sum_k sqrt(mu_k) |k>|e_k> purifies rho_B on an auxiliary qubit
B' (basis labelled by the eigenvectors e_k of rho_B). Lambda acts on Bloch
vectors as r -> L r + l.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from . import _ascent
from .measures import concurrence_of_assistance_2q, linear_entropy, sigma_y_chain_lb
from .oracle import OracleConfig, tangle_oracle
from .qstate import QState, StateError, check_state, mixed, partial_trace, spectral

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
I2 = np.eye(2, dtype=complex)
FULL_RANK_CUTOFF = 1e-10


class ChannelError(StateError):
    """The channel decomposition does not apply (rank-deficient rho_B)."""


@dataclass
class ChannelBloch:
    L: np.ndarray
    l: np.ndarray
    choi: np.ndarray  # (2, 2, 2, 2): choi[k, l] = Lambda(|k><l|)
    basis: np.ndarray  # columns e_k
    mu: np.ndarray  # eigenvalues of rho_B, descending

    def superop(self) -> np.ndarray:
        """4x4 matrix S with vec(Lambda(X)) = S vec(X), row-major vec."""
        return self.choi.transpose(2, 3, 0, 1).reshape(4, 4)

    def apply(self, X) -> np.ndarray:
        return np.einsum("kl,klab->ab", np.asarray(X), self.choi)

    def apply_bloch(self, r) -> np.ndarray:
        return self.L @ np.asarray(r) + self.l

    @property
    def input_bloch(self) -> np.ndarray:
        """Bloch vector of rho_B' = diag(mu) in the labelled basis."""
        return np.array([0.0, 0.0, self.mu[0] - self.mu[1]])


def bloch(rho) -> np.ndarray:
    rho = rho.dm() if isinstance(rho, QState) else np.asarray(rho)
    return np.real(np.einsum("iab,ba->i", PAULI, rho))


def from_bloch(r) -> np.ndarray:
    return (I2 + np.einsum("i,iab->ab", np.asarray(r, dtype=float), PAULI)) / 2


def _two_qubit(rho) -> QState:
    rho = check_state(rho)
    if rho.dims != (2, 2):
        raise StateError(f"two-qubit state required, got dims {rho.dims}")
    return rho


def _spectrum_b(rho_b: np.ndarray):
    sd = spectral(rho_b)
    return sd.eigenvalues, sd.eigenvectors


def symmetric_purification(rho_b) -> QState:
    """sum_k sqrt(mu_k) |k>|e_k>; reductions are rho_B and diag(mu)."""
    rho_b = check_state(rho_b)
    if rho_b.dims != (2,):
        raise StateError(f"single-qubit state required, got dims {rho_b.dims}")
    mu, e = _spectrum_b(rho_b.dm())
    v = sum(np.sqrt(max(m, 0.0)) * np.kron(np.eye(2)[k], e[:, k]) for k, m in enumerate(mu))
    return QState((2, 2), "pure", v)


def extract_channel(rho_ab) -> ChannelBloch:
    """Lambda(|k><l|) = Tr_B[rho (I (x) |e_l><e_k|)] / sqrt(mu_k mu_l)."""
    rho = _two_qubit(rho_ab)
    rho_b = partial_trace(rho, [1]).dm()
    mu, e = _spectrum_b(rho_b)
    if mu[-1] <= FULL_RANK_CUTOFF:
        raise ChannelError(
            f"rho_B is rank-deficient (eigenvalues {mu[0]:.3g}, {mu[1]:.3g}); "
            "the channel decomposition needs full-rank rho_B, apply a local filter first"
        )
    R = rho.dm().reshape(2, 2, 2, 2)  # [a, b, a', b']
    # <e_k|_B rho |e_l>_B as an operator on A
    blocks = np.einsum("bk,abcd,dl->klac", e.conj(), R, e)
    choi = blocks / np.sqrt(np.outer(mu, mu))[:, :, None, None]
    L = np.empty((3, 3))
    for j in range(3):
        out = np.einsum("kl,klab->ab", PAULI[j], choi)
        L[:, j] = np.real(np.einsum("iab,ba->i", PAULI, out)) / 2
    lam_id = choi[0, 0] + choi[1, 1]
    l = np.real(np.einsum("iab,ba->i", PAULI, lam_id)) / 2
    return ChannelBloch(L, l, choi, e, mu)


def reconstruct(ch: ChannelBloch) -> np.ndarray:
    """(Lambda (x) I)|V><V| rebuilt from the channel and the purification."""
    out = np.zeros((2, 2, 2, 2), dtype=complex)
    for k in range(2):
        for l in range(2):
            w = np.sqrt(ch.mu[k] * ch.mu[l])
            out += w * np.einsum("ac,bd->abcd", ch.choi[k, l], np.outer(ch.basis[:, k], ch.basis[:, l].conj()))
    return out.reshape(4, 4)


def lambda_min(ch: ChannelBloch) -> float:
    return float(max(0.0, np.linalg.eigvalsh(ch.L.T @ ch.L)[0]))


def i_measure(rho_ab) -> float:
    """lambda_min(L^T L) * S_2(rho_B)."""
    rho = _two_qubit(rho_ab)
    ch = extract_channel(rho)
    return lambda_min(ch) * linear_entropy(partial_trace(rho, [1]))


def two_point_ensemble(ch: ChannelBloch) -> tuple[np.ndarray, np.ndarray]:
    """Optimal two-member decomposition of rho_B' along the lambda_min axis of L^T L.

    Returns probabilities (2,) and unit Bloch vectors (2, 3) averaging to the
    input Bloch vector.
    """
    w, V = np.linalg.eigh(ch.L.T @ ch.L)
    axis = V[:, 0]
    r = ch.input_bloch
    b = float(r @ axis)
    disc = np.sqrt(max(b * b + 1.0 - r @ r, 0.0))
    xp, xm = -b + disc, -b - disc
    if xp - xm < 1e-300:
        return np.array([1.0]), (r + xp * axis)[None]
    p = np.array([-xm, xp]) / (xp - xm)
    return p, np.array([r + xp * axis, r + xm * axis])


def channel_entropy_gap(ch: ChannelBloch, probs, bloch_vectors) -> float:
    """S_2(Lambda(rho_B')) - sum_j p_j S_2(Lambda(rho_j)), evaluated through the Choi action."""
    avg = linear_entropy(ch.apply(np.diag(ch.mu).astype(complex)))
    return avg - sum(p * linear_entropy(ch.apply(from_bloch(r))) for p, r in zip(probs, bloch_vectors))


def _channel_members(ch: ChannelBloch):
    S = ch.superop()
    SH = S.conj().T

    def fn(Phi):
        rho = np.einsum("rki,rkj->rkij", Phi, Phi.conj()).reshape(Phi.shape[:2] + (4,))
        sig = rho @ S.T
        q = np.sum(np.abs(Phi) ** 2, axis=-1)
        T = np.sum(np.abs(sig) ** 2, axis=-1)
        H = (sig @ SH.T).reshape(Phi.shape[:2] + (2, 2))
        qs = np.where(q > 1e-300, q, 1.0)
        f = np.where(q > 1e-300, 2 * (q - T / qs), 0.0)
        Hphi = np.einsum("rkij,rkj->rki", H, Phi)
        g = 2 * (Phi - 2 * Hphi / qs[..., None] + (T / qs**2)[..., None] * Phi)
        return f, g

    return fn


def i_measure_direct(rho_ab, cfg: OracleConfig | None = None) -> float:
    """S_2(rho_A) minus the best found sum_x p_x S_2(Lambda(psi_x)) over decompositions of rho_B'.

    A rank-deficient rho_B means rho_AB = rho_A (x) |b><b|, where every
    post-measurement state equals rho_A and the quantity is exactly 0.
    """
    cfg = cfg or OracleConfig()
    rho = _two_qubit(rho_ab)
    try:
        ch = extract_channel(rho)
    except ChannelError:
        return 0.0
    X = np.diag(np.sqrt(ch.mu)).astype(complex)
    k = cfg.members(2)
    res = _ascent.maximize(X, k, _channel_members(ch), cfg.restarts, cfg.seed, cfg.max_evals)
    s2a = linear_entropy(partial_trace(rho, [0]))
    return float(max(0.0, s2a - res.values.max()))


# ---------------------------------------------------------------------------
# Local filtering


@dataclass
class FilterOp:
    B: np.ndarray

    def normalization(self, rho) -> float:
        rho = rho.dm() if isinstance(rho, QState) else np.asarray(rho)
        BB = self.B.conj().T @ self.B
        return float(np.real(np.trace(np.kron(I2, BB) @ rho)))

    def scale(self, rho) -> float:
        """|det B|^2 / Tr[(I (x) B^H B) rho]^2, the factor applied to S_2(rho_B) and I."""
        return float(abs(np.linalg.det(self.B)) ** 2 / self.normalization(rho) ** 2)


def apply_filter(rho_ab, f: FilterOp) -> QState:
    """(I (x) B) rho (I (x) B^H) / Tr[(I (x) B^H B) rho]."""
    rho = _two_qubit(rho_ab)
    norm = f.normalization(rho)
    if norm <= 1e-12:
        raise StateError(f"filter annihilates the state (normalization {norm:.3g})")
    K = np.kron(I2, np.asarray(f.B, dtype=complex))
    return mixed(K @ rho.dm() @ K.conj().T / norm, (2, 2))


def normalize_filter(rho_ab) -> tuple[FilterOp, QState]:
    """Filter B = rho_B^-1/2 / sqrt(2), which brings rho_B to I/2."""
    rho = _two_qubit(rho_ab)
    mu, e = _spectrum_b(partial_trace(rho, [1]).dm())
    if mu[-1] <= FULL_RANK_CUTOFF:
        raise ChannelError("rho_B is rank-deficient; no invertible filter maps it to I/2")
    B = (e / np.sqrt(mu)) @ e.conj().T / np.sqrt(2)
    f = FilterOp(B)
    return f, apply_filter(rho, f)


def frame_residual(L1: np.ndarray, L2: np.ndarray) -> float:
    """min over rotations O in SO(3) of ||L2 - L1 O||_F.

    Channels extracted from purifications that differ by a unitary on B'
    have Bloch matrices related by such a right rotation.
    """
    W, _, Vh = np.linalg.svd(L1.T @ L2)
    d = np.sign(np.linalg.det(W @ Vh)) or 1.0
    O = W @ np.diag([1.0, 1.0, d]) @ Vh
    return float(np.linalg.norm(L2 - L1 @ O))


# ---------------------------------------------------------------------------
# Normal form


def su2_from_rotation(R: np.ndarray) -> np.ndarray:
    """U with U sigma_j U^H = sum_i R_ij sigma_i for R in SO(3)."""
    v = Rotation.from_matrix(R).as_rotvec()
    theta = np.linalg.norm(v)
    if theta < 1e-15:
        return I2.copy()
    n = v / theta
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * np.einsum("i,iab->ab", n, PAULI)


def pauli_coefficients(rho) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, s, T) with rho = 1/4 [I + t.sigma (x) I + I (x) s.sigma + sum T_ij sigma_i (x) sigma_j]."""
    rho = rho.dm() if isinstance(rho, QState) else np.asarray(rho)
    t = np.array([np.trace(rho @ np.kron(P, I2)).real for P in PAULI])
    s = np.array([np.trace(rho @ np.kron(I2, P)).real for P in PAULI])
    T = np.array([[np.trace(rho @ np.kron(P, Q)).real for Q in PAULI] for P in PAULI])
    return t, s, T


@dataclass
class NormalForm:
    t: np.ndarray
    R: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    residual: float

    def density_matrix(self) -> np.ndarray:
        out = np.eye(4, dtype=complex)
        for i in range(3):
            out += self.t[i] * np.kron(PAULI[i], I2) + self.R[i] * np.kron(PAULI[i], PAULI[i])
        return out / 4

    @property
    def positivity_margin(self) -> float:
        """1 - |t|^2 - R_3^2, nonnegative for every valid state."""
        return float(1.0 - self.t @ self.t - self.R[2] ** 2)


def normal_form(rho_ab, atol: float = 1e-8) -> NormalForm:
    """Local unitaries making the correlation matrix diagonal (|R| descending)."""
    rho = _two_qubit(rho_ab)
    rho_b = partial_trace(rho, [1]).dm()
    dev = np.max(np.abs(rho_b - I2 / 2))
    if dev > atol:
        raise StateError(f"normal form needs rho_B = I/2 (deviation {dev:.3g}); apply normalize_filter first")
    t, _, T = pauli_coefficients(rho)
    W, s, Vh = np.linalg.svd(T)
    if np.linalg.det(W) < 0:
        W[:, 2] *= -1
        s[2] *= -1
    if np.linalg.det(Vh) < 0:
        Vh[2, :] *= -1
        s[2] *= -1
    U1 = su2_from_rotation(W.T)
    U2 = su2_from_rotation(Vh)
    t_new = W.T @ t
    K = np.kron(U1, U2)
    rotated = K @ rho.dm() @ K.conj().T
    nf = NormalForm(t_new, s, U1, U2, 0.0)
    nf.residual = float(np.max(np.abs(nf.density_matrix() - rotated)))
    return nf


@dataclass
class ChainReport:
    tangle: float
    ca_squared: float
    sigma_y: float
    i_value: float
    oracle_converged: bool

    @property
    def values(self) -> tuple[float, float, float, float]:
        return (self.tangle, self.ca_squared, self.sigma_y, self.i_value)

    @property
    def margins(self) -> tuple[float, float, float]:
        v = self.values
        return (v[0] - v[1], v[1] - v[2], v[2] - v[3])

    def to_dict(self) -> dict:
        return {
            "tangle_oracle": self.tangle,
            "ca_squared": self.ca_squared,
            "sigma_y_chain": self.sigma_y,
            "lambda_min_s2": self.i_value,
            "margins": list(self.margins),
            "oracle_converged": self.oracle_converged,
        }


def final_chain_check(rho_ab, cfg: OracleConfig | None = None, atol: float = 1e-8) -> ChainReport:
    """tau_a >= C_a^2 >= Tr[rho~ rho] >= lambda_min(L^T L) for a state with rho_B = I/2."""
    rho = _two_qubit(rho_ab)
    normal_form(rho, atol)  # enforces rho_B = I/2
    ora = tangle_oracle(rho, cfg)
    ch = extract_channel(rho)
    i_val = lambda_min(ch) * linear_entropy(partial_trace(rho, [1]))
    ca = concurrence_of_assistance_2q(rho)
    return ChainReport(ora.value, ca * ca, sigma_y_chain_lb(rho), i_val, ora.converged)

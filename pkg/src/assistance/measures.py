"""Closed-form entanglement measures.

Generators are the unnormalized antisymmetric basis ``|j><k| - |k><j|``, so
for a pure bipartite state the I-concurrence obeys C^2 = 2(1 - Tr rho_A^2).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .qstate import QState, StateError, check_state, partial_trace

SIGMA_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


@dataclass(frozen=True)
class GeneratorSet:
    d: int
    generators: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.generators)


@lru_cache(maxsize=None)
def so_generators(d: int) -> GeneratorSet:
    """The d(d-1)/2 real antisymmetric generators of SO(d), ordered by (j, k)."""
    if d < 2:
        raise StateError(f"SO(d) generators need d >= 2, got {d}")
    gens = []
    for j in range(d):
        for k in range(j + 1, d):
            L = np.zeros((d, d))
            L[j, k] = 1.0
            L[k, j] = -1.0
            L.setflags(write=False)
            gens.append(L)
    return GeneratorSet(d, tuple(gens))


@lru_cache(maxsize=None)
def s_operators(d1: int, d2: int) -> np.ndarray:
    """Stack of S_mn = L_m (x) L_n, shape (n_pairs, d1*d2, d1*d2), m-major order."""
    ops = [np.kron(a, b) for a in so_generators(d1).generators for b in so_generators(d2).generators]
    out = np.array(ops)
    out.setflags(write=False)
    return out


def i_concurrence(psi, gens_a: GeneratorSet | None = None, gens_b: GeneratorSet | None = None) -> float:
    """I-concurrence sqrt(sum_mn |<psi| S_mn |psi*>|^2) of a pure bipartite state."""
    psi = check_state(psi, n=2, kind="pure")
    d1, d2 = psi.dims
    if (gens_a is not None and gens_a.d != d1) or (gens_b is not None and gens_b.d != d2):
        raise StateError(f"generator sets do not match dims {psi.dims}")
    if d1 < 2 or d2 < 2:
        return 0.0
    v = psi.data
    S = s_operators(d1, d2)
    amps = np.einsum("i,mij,j->m", v.conj(), S, v.conj())
    return float(np.sqrt(np.sum(np.abs(amps) ** 2)))


def linear_entropy(rho) -> float:
    """S_2(rho) = 2(1 - Tr rho^2)."""
    if isinstance(rho, QState):
        rho = rho.dm()
    rho = np.asarray(rho)
    purity = np.real(np.vdot(rho, rho))
    return max(0.0, 2.0 * (1.0 - purity))


def pure_tangle(psi: QState, side: int = 0) -> float:
    """S_2 of one side of a pure bipartite state, i.e. the squared I-concurrence."""
    return linear_entropy(partial_trace(psi, [side]))


def _two_qubit(rho) -> np.ndarray:
    rho = check_state(rho)
    if rho.dims != (2, 2):
        raise StateError(f"two-qubit state required, got dims {rho.dims}")
    return rho.dm()


def spin_flip(rho: np.ndarray) -> np.ndarray:
    """Wootters tilde: (sy (x) sy) rho* (sy (x) sy)."""
    return SIGMA_YY @ rho.conj() @ SIGMA_YY


def _flip_lambdas(rho: np.ndarray) -> np.ndarray:
    # sqrt-eigenvalues of rho rho~ are the singular values of sqrt(rho) sy.sy sqrt(rho)*,
    # which avoids the non-Hermitian eigenproblem
    w, v = np.linalg.eigh(rho)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    return np.linalg.svd(root @ SIGMA_YY @ root.conj(), compute_uv=False)


def wootters_concurrence(rho) -> float:
    lam = _flip_lambdas(_two_qubit(rho))
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence_of_assistance_2q(rho) -> float:
    """Closed-form concurrence of assistance of a two-qubit state (sum of the lambdas)."""
    return float(min(1.0, np.sum(_flip_lambdas(_two_qubit(rho)))))


def sigma_y_chain_lb(rho) -> float:
    """Tr[rho~ rho], the spin-flip overlap used as a lower bound on C_a^2."""
    r = _two_qubit(rho)
    return float(max(0.0, np.trace(spin_flip(r) @ r).real))

"""Quantum-state container and the dense linear algebra the rest of the package uses.

Subsystem 0 is the most significant tensor factor and all flattening is
row-major, so ``psi.reshape(dims)`` indexes amplitudes by subsystem.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ATOL = 1e-10
RANK_CUTOFF = 1e-12


class StateError(ValueError):
    """Raised for invalid states or invalid arguments to state operations."""


@dataclass(frozen=True, eq=False)
class QState:
    """A pure state vector or a density matrix over ``dims``.

    Use :func:`pure` / :func:`mixed` to build one; they validate the input.
    """

    dims: tuple[int, ...]
    kind: str
    data: np.ndarray

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    def dm(self) -> np.ndarray:
        """Density matrix of the state."""
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def to_mixed(self) -> "QState":
        if not self.is_pure:
            return self
        return QState(self.dims, "mixed", _readonly(self.dm()))

    def __repr__(self) -> str:
        return f"QState(dims={self.dims}, kind={self.kind!r})"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise StateError(f"invalid subsystem dimensions {dims}")
    return dims


def pure(vec, dims: Sequence[int] | None = None, atol: float = ATOL) -> QState:
    """Validated pure state. ``dims`` defaults to a single system."""
    vec = np.asarray(vec, dtype=complex).ravel()
    dims = _check_dims(dims if dims is not None else (vec.size,))
    if vec.size != int(np.prod(dims)):
        raise StateError(f"vector length {vec.size} does not match dims {dims}")
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > atol:
        raise StateError(f"state vector has norm {norm:.12g}, expected 1")
    return QState(dims, "pure", _readonly(vec))


def mixed(rho, dims: Sequence[int] | None = None, atol: float = ATOL) -> QState:
    """Validated density matrix.

    Eigenvalues in ``[-atol, 0)`` are clamped to zero; anything more negative
    is rejected.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise StateError(f"density matrix must be square, got shape {rho.shape}")
    dims = _check_dims(dims if dims is not None else (rho.shape[0],))
    if rho.shape[0] != int(np.prod(dims)):
        raise StateError(f"matrix side {rho.shape[0]} does not match dims {dims}")
    herm_err = np.max(np.abs(rho - rho.conj().T))
    if herm_err > atol:
        raise StateError(f"density matrix is not Hermitian (max deviation {herm_err:.3g})")
    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise StateError(f"density matrix has trace {tr:.12g}, expected 1")
    w, v = np.linalg.eigh(rho)
    if w[0] < -atol:
        raise StateError(f"density matrix has negative eigenvalue {w[0]:.3g}")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        rho = (v * w) @ v.conj().T
    return QState(dims, "mixed", _readonly(rho))


def as_state(obj, dims: Sequence[int] | None = None) -> QState:
    """Coerce an array (vector or matrix) or a QState into a validated QState."""
    if isinstance(obj, QState):
        return obj
    arr = np.asarray(obj)
    if arr.ndim == 1 or (arr.ndim == 2 and 1 in arr.shape):
        return pure(arr, dims)
    return mixed(arr, dims)


def check_state(
    state,
    *,
    n: int | None = None,
    dims: Sequence[int] | None = None,
    kind: str | None = None,
) -> QState:
    """Coerce ``state`` and check its shape requirements, raising StateError."""
    state = as_state(state, dims if (dims is not None and not isinstance(state, QState)) else None)
    if n is not None and state.n != n:
        raise StateError(f"expected {n} subsystems, got dims {state.dims}")
    if dims is not None and state.dims != tuple(dims):
        raise StateError(f"expected dims {tuple(dims)}, got {state.dims}")
    if kind is not None and state.kind != kind:
        raise StateError(f"expected a {kind} state, got {state.kind}")
    return state


# ---------------------------------------------------------------------------
# Linear algebra


def partial_trace(state: QState, keep: Sequence[int]) -> QState:
    """Reduced density matrix on the subsystems in ``keep`` (kept in ascending order)."""
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise StateError("keep must be nonempty")
    if keep[0] < 0 or keep[-1] >= state.n:
        raise StateError(f"subsystem index out of range for dims {state.dims}: {keep}")
    dims = state.dims
    traced = [i for i in range(state.n) if i not in keep]
    kdims = tuple(dims[i] for i in keep)
    kd = int(np.prod(kdims))
    if state.is_pure:
        psi = state.data.reshape(dims)
        psi = np.transpose(psi, keep + traced).reshape(kd, -1)
        rho = psi @ psi.conj().T
    else:
        n = state.n
        rho = state.data.reshape(dims + dims)
        perm = keep + traced + [n + i for i in keep] + [n + i for i in traced]
        td = int(np.prod([dims[i] for i in traced])) if traced else 1
        rho = np.transpose(rho, perm).reshape(kd, td, kd, td)
        rho = np.einsum("ajbj->ab", rho)
    rho = (rho + rho.conj().T) / 2
    return QState(kdims, "mixed", _readonly(rho))


def permute(state: QState, order: Sequence[int]) -> QState:
    """Reorder subsystems so that new subsystem ``i`` is old subsystem ``order[i]``."""
    order = list(order)
    if sorted(order) != list(range(state.n)):
        raise StateError(f"{order} is not a permutation of {state.n} subsystems")
    dims = tuple(state.dims[i] for i in order)
    if state.is_pure:
        data = np.transpose(state.data.reshape(state.dims), order).reshape(-1)
    else:
        n = state.n
        data = np.transpose(state.data.reshape(state.dims * 2), order + [n + i for i in order])
        data = data.reshape(int(np.prod(dims)), -1)
    return QState(dims, state.kind, _readonly(data))


def group(state: QState, blocks: Sequence[Sequence[int]]) -> QState:
    """Regroup subsystems into composite parties, e.g. ``[[0], [1, 2]]`` for A|BC."""
    order = [i for b in blocks for i in b]
    st = permute(state, order)
    dims = tuple(int(np.prod([state.dims[i] for i in b])) for b in blocks)
    return QState(dims, st.kind, st.data)


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigenvalues (descending) and the unitary of eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def rank(self, cutoff: float = RANK_CUTOFF) -> int:
        return int(np.sum(self.eigenvalues > cutoff))

    def support(self, cutoff: float = RANK_CUTOFF) -> tuple[np.ndarray, np.ndarray]:
        r = self.rank(cutoff)
        return self.eigenvalues[:r], self.eigenvectors[:, :r]


def spectral(rho) -> SpectralDecomp:
    if isinstance(rho, QState):
        rho = rho.dm()
    rho = np.asarray(rho, dtype=complex)
    if np.max(np.abs(rho - rho.conj().T)) > ATOL:
        raise StateError("spectral decomposition needs a Hermitian matrix")
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    # stable so that degenerate eigenvectors keep eigh's order
    idx = np.argsort(-w, kind="stable")
    w = w[idx]
    w[(w < 0) & (w > -ATOL)] = 0.0
    return SpectralDecomp(w, v[:, idx])


def trace_norm(G) -> float:
    """Sum of singular values."""
    G = np.asarray(G)
    if G.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(G, compute_uv=False)))


# ---------------------------------------------------------------------------
# Sampling


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_random_pure(dims: Sequence[int], seed=None) -> QState:
    """Unitarily invariant random pure state (normalized complex Gaussian)."""
    dims = _check_dims(dims)
    rng = _rng(seed)
    d = int(np.prod(dims))
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return QState(dims, "pure", _readonly(v))


def random_mixed(dims: Sequence[int], rank: int, seed=None) -> QState:
    """Induced-measure random state: partial trace of a Haar purification with ancilla ``rank``."""
    dims = _check_dims(dims)
    d = int(np.prod(dims))
    if not 1 <= rank <= d:
        raise StateError(f"rank must be between 1 and {d}, got {rank}")
    rng = _rng(seed)
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    rho = (rho + rho.conj().T) / 2
    return QState(dims, "mixed", _readonly(rho))


def haar_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-random d x d unitary (QR of a Ginibre matrix with phase fix)."""
    rng = _rng(seed)
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def local_unitary(state: QState, unitaries: Sequence[np.ndarray]) -> QState:
    """Apply U_0 (x) U_1 (x) ... to ``state``."""
    U = np.array([[1.0 + 0j]])
    for u in unitaries:
        U = np.kron(U, u)
    if state.is_pure:
        return QState(state.dims, "pure", _readonly(U @ state.data))
    return QState(state.dims, "mixed", _readonly(U @ state.data @ U.conj().T))


def sub_seed(seed: int, *index: int) -> np.random.SeedSequence:
    """Independent child seed for (seed, index...), stable across runs and platforms."""
    return np.random.SeedSequence([int(seed), *[int(i) for i in index]])


# ---------------------------------------------------------------------------
# Named states


def basis_state(bits: Sequence[int], dims: Sequence[int] | None = None) -> QState:
    dims = tuple(dims) if dims is not None else (2,) * len(bits)
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[np.ravel_multi_index(tuple(bits), dims)] = 1.0
    return QState(dims, "pure", _readonly(v))


def ghz(n: int = 3, theta: float = np.pi / 4) -> QState:
    """cos(theta)|0...0> + sin(theta)|1...1>."""
    v = np.zeros(2**n, dtype=complex)
    v[0] = np.cos(theta)
    v[-1] = np.sin(theta)
    return QState((2,) * n, "pure", _readonly(v))


def w_state(n: int = 3) -> QState:
    v = np.zeros(2**n, dtype=complex)
    for i in range(n):
        v[1 << i] = 1.0
    return QState((2,) * n, "pure", _readonly(v / np.sqrt(n)))


def bell() -> QState:
    """|Phi+> = (|00> + |11>)/sqrt(2)."""
    return ghz(2)


def product(*states: QState) -> QState:
    """Tensor product; the result is pure only if every factor is pure."""
    if all(s.is_pure for s in states):
        v = np.array([1.0 + 0j])
        for s in states:
            v = np.kron(v, s.data)
        return QState(tuple(d for s in states for d in s.dims), "pure", _readonly(v))
    m = np.array([[1.0 + 0j]])
    for s in states:
        m = np.kron(m, s.dm())
    return QState(tuple(d for s in states for d in s.dims), "mixed", _readonly(m))

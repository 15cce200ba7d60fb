"""Batched L-BFGS maximization over isometries U (k x r, U^H U = I).

The objective is F(U) = sum_i f(phi_i) with unnormalized members
phi_i = X @ U[i]. Pure-state decompositions (X = Psi M^1/2) and rank-1
POVMs on a purifying party (X = the state reshaped against the measured
party) both have this form, so one engine serves both.

``member_fn(Phi)`` maps members of shape (R, k, n) to values (R, k) and
Wirtinger gradients df/d conj(phi) of shape (R, k, n).

U is parametrized without constraints as the polar factor of a free complex
matrix G, U = G (G^H G)^-1/2, and all restarts advance together as one batch.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .qstate import sub_seed

MemberFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

_MEMORY = 20
_ARMIJO = 1e-4
# Laggards: once half the batch has stopped, a restart still running after
# _LAG_FACTOR times the median budget of the stopped ones while sitting
# _LAG_GAP below their best value is stopped (typically a slow saddle escape).
_LAG_FACTOR = 4
_LAG_MIN_EVALS = 200
_LAG_GAP = 1e-6


@dataclass
class AscentResult:
    U: np.ndarray  # (R, k, r)
    values: np.ndarray  # (R,)
    evals: np.ndarray  # (R,)
    history: list[np.ndarray]  # best value per restart after each iteration


def random_isometry(k: int, r: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((k, r)) + 1j * rng.standard_normal((k, r))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def polar(Y: np.ndarray) -> np.ndarray:
    W, _, Vh = np.linalg.svd(Y, full_matrices=False)
    return W @ Vh


def _herm(A):
    return A.conj().swapaxes(-1, -2)


def _value_and_grad(G, X, member_fn):
    """F(polar(G)) and dF/d conj(G) for a batch of G (R, k, r), plus cond(G^H G)."""
    c, Q = np.linalg.eigh(_herm(G) @ G)
    cond = c[:, -1] / np.maximum(c[:, 0], 1e-300)
    c = np.maximum(c, 1e-300)
    isq = c**-0.5
    Cm = (Q * isq[:, None, :]) @ _herm(Q)
    U = G @ Cm
    f, g = member_fn(U @ X.T)
    F = f.sum(axis=-1)
    E = g @ X.conj()
    # derivative of C^-1/2 by divided differences in the eigenbasis of C
    dc = c[:, :, None] - c[:, None, :]
    same = np.abs(dc) <= 1e-12 * np.maximum(c[:, :, None], c[:, None, :])
    gam = np.where(same, -0.5 * c[:, :, None] ** -1.5, (isq[:, :, None] - isq[:, None, :]) / np.where(same, 1.0, dc))
    B = _herm(Q) @ _herm(E) @ G @ Q
    Y = Q @ (B * gam) @ _herm(Q)
    EG = E @ Cm + G @ (Y + _herm(Y))
    return F, EG, U, cond


def _pack(Z):
    return np.concatenate([Z.real.reshape(len(Z), -1), Z.imag.reshape(len(Z), -1)], axis=1)


def maximize(
    X: np.ndarray,
    k: int,
    member_fn: MemberFn,
    restarts: int,
    seed: int,
    max_evals: int = 2000,
    ftol: float = 1e-14,
    starts: np.ndarray | None = None,
) -> AscentResult:
    """Multi-start maximization; restart ``i`` starts from sub-seed (seed, i) unless ``starts`` given."""
    r = X.shape[1]
    if starts is None:
        G0 = np.array([random_isometry(k, r, sub_seed(seed, i)) for i in range(restarts)])
    else:
        G0 = np.array(starts, dtype=complex)
    R = G0.shape[0]
    D = k * r

    def unpack(x):
        return (x[:, :D] + 1j * x[:, D:]).reshape(len(x), k, r)

    def evaluate(x):
        bad = ~np.all(np.isfinite(x), axis=1)
        x = np.where(bad[:, None], 0.0, x)
        with np.errstate(all="ignore"):
            F, EG, U, cond = _value_and_grad(unpack(x), X, member_fn)
        g = -2.0 * _pack(EG)
        bad |= ~np.isfinite(F) | ~np.all(np.isfinite(g), axis=1) | (cond > 1e12)
        # minimize h = -F; real gradient of F is 2 * (Re, Im) of dF/d conj(G)
        h = np.where(bad, np.inf, -F)
        return h, np.where(bad[:, None], 0.0, g), U, cond

    x = _pack(G0)
    h, grad, U, _ = evaluate(x)
    evals = np.ones(R, dtype=int)
    S = np.zeros((R, _MEMORY, 2 * D))
    Yv = np.zeros((R, _MEMORY, 2 * D))
    rho = np.zeros((R, _MEMORY))
    head = np.zeros(R, dtype=int)
    count = np.zeros(R, dtype=int)
    gamma = np.zeros(R)
    stall = np.zeros(R, dtype=int)
    active = np.ones(R, dtype=bool)
    history = [-h.copy()]

    while active.any():
        idx = np.flatnonzero(active)
        # two-loop recursion over the ring buffer, newest first
        q = grad[idx].copy()
        alpha = np.zeros((len(idx), _MEMORY))
        for j in range(_MEMORY):
            slot = (head[idx] - 1 - j) % _MEMORY
            s = S[idx, slot]
            y = Yv[idx, slot]
            rr = rho[idx, slot]
            alpha[:, j] = rr * np.einsum("ij,ij->i", s, q)
            q -= alpha[:, j, None] * y
        scale = np.where(count[idx] > 0, gamma[idx], 1.0 / np.maximum(np.linalg.norm(grad[idx], axis=1), 1e-12))
        d = scale[:, None] * q
        for j in reversed(range(_MEMORY)):
            slot = (head[idx] - 1 - j) % _MEMORY
            s = S[idx, slot]
            y = Yv[idx, slot]
            rr = rho[idx, slot]
            beta = rr * np.einsum("ij,ij->i", y, d)
            d += s * (alpha[:, j] - beta)[:, None]
        d = -d
        slope = np.einsum("ij,ij->i", grad[idx], d)
        bad = slope >= 0
        if bad.any():
            d[bad] = -grad[idx[bad]] / np.maximum(np.linalg.norm(grad[idx[bad]], axis=1, keepdims=True), 1e-12)
            slope[bad] = np.einsum("ij,ij->i", grad[idx[bad]], d[bad])
            count[idx[bad]] = 0
            rho[idx[bad]] = 0.0

        # backtracking Armijo line search, batched
        t = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        x_new = x[idx].copy()
        h_new = h[idx].copy()
        g_new = grad[idx].copy()
        U_new = U[idx].copy()
        c_new = np.ones(len(idx))
        for _ in range(40):
            if not pending.any():
                break
            p = np.flatnonzero(pending)
            xt = x[idx[p]] + t[p, None] * d[p]
            ht, gt, Ut, ct = evaluate(xt)
            evals[idx[p]] += 1
            ok = ht <= h[idx[p]] + _ARMIJO * t[p] * slope[p]
            okp = p[ok]
            x_new[okp], h_new[okp], g_new[okp], U_new[okp] = xt[ok], ht[ok], gt[ok], Ut[ok]
            c_new[okp] = ct[ok]
            pending[okp] = False
            t[p[~ok]] *= 0.5
        moved = ~pending

        i_m = idx[moved]
        s_vec = x_new[moved] - x[i_m]
        y_vec = g_new[moved] - grad[i_m]
        sy = np.einsum("ij,ij->i", s_vec, y_vec)
        good = sy > 1e-12 * np.linalg.norm(s_vec, axis=1) * np.linalg.norm(y_vec, axis=1)
        ig = i_m[good]
        S[ig, head[ig]] = s_vec[good]
        Yv[ig, head[ig]] = y_vec[good]
        rho[ig, head[ig]] = 1.0 / sy[good]
        gamma[ig] = sy[good] / np.einsum("ij,ij->i", y_vec[good], y_vec[good])
        head[ig] = (head[ig] + 1) % _MEMORY
        count[ig] = np.minimum(count[ig] + 1, _MEMORY)

        gain = h[i_m] - h_new[moved]
        x[i_m], h[i_m], grad[i_m], U[i_m] = x_new[moved], h_new[moved], g_new[moved], U_new[moved]
        small = gain <= ftol * np.maximum(1.0, np.abs(h[i_m]))
        stall[i_m] = np.where(small, stall[i_m] + 1, 0)

        # re-center drifting parametrizations on their polar factor; F is unchanged
        drift = i_m[c_new[moved] > 1e4]
        if len(drift):
            x[drift] = _pack(U[drift])
            h[drift], grad[drift], U[drift], _ = evaluate(x[drift])
            evals[drift] += 1
            count[drift] = 0
            rho[drift] = 0.0

        gnorm = np.linalg.norm(grad[idx], axis=1)
        done = (evals[idx] >= max_evals) | (gnorm < 1e-12) | (stall[idx] >= 3) | pending
        active[idx[done]] = False
        stopped = ~active
        if active.any() and stopped.sum() * 2 >= R:
            budget = max(_LAG_MIN_EVALS, _LAG_FACTOR * np.median(evals[stopped]))
            best = np.min(h[stopped])
            lag = active & (evals > budget) & (h > best + _LAG_GAP)
            active[lag] = False
        history.append(-h.copy())
    return AscentResult(U, -h, evals, history)

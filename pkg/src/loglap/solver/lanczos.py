"""Thick-restart Lanczos for a few smallest eigenpairs of a symmetric operator.

Every new Lanczos vector is orthogonalised against the whole basis (two
passes of classical Gram-Schmidt).  After ``ncv`` steps the Rayleigh quotient
matrix is diagonalised, the lowest Ritz pairs are kept and the residual
vector is appended, giving the arrowhead restart of Krylov-Schur / Wu-Simon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from ..errors import ConvergenceError


@dataclass
class LanczosResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    matvecs: int
    restarts: int


def _orthogonalize(V, j, w):
    Q = V[:, : j + 1]
    h = Q.T @ w
    w -= Q @ h
    h2 = Q.T @ w
    w -= Q @ h2
    return h + h2


def lanczos_smallest(
    apply: Callable[[np.ndarray], np.ndarray],
    n: int,
    k: int,
    tol: float = 1e-9,
    ncv: Optional[int] = None,
    max_restarts: int = 500,
    seed: int = 0,
    v0: Optional[np.ndarray] = None,
) -> LanczosResult:
    """k smallest eigenpairs of the symmetric operator ``apply`` on R^n.

    Converged pairs satisfy ||A y - theta y|| <= tol (unit-norm y), verified
    explicitly at the end.  Raises :class:`ConvergenceError` with the partial
    :class:`LanczosResult` attached when ``max_restarts`` is exhausted.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if ncv is None:
        ncv = max(2 * k + 20, 40)
    ncv = min(ncv, n)
    rng = np.random.default_rng(seed)
    V = np.empty((n, ncv + 1), order="F")
    v = rng.standard_normal(n) if v0 is None else np.array(v0, dtype=float)
    V[:, 0] = v / np.linalg.norm(v)
    T = np.zeros((ncv, ncv))
    kk = 0
    beta = 0.0
    matvecs = 0
    scale = 0.0
    restarts = 0
    while True:
        for j in range(kk, ncv):
            w = np.array(apply(V[:, j]), dtype=float)
            matvecs += 1
            h = _orthogonalize(V, j, w)
            T[: j + 1, j] = h
            T[j, : j + 1] = h
            scale = max(scale, abs(h[j]))
            beta = float(np.linalg.norm(w))
            if beta <= 1e-13 * max(scale, 1e-300):
                # invariant subspace: continue with a fresh orthogonal direction
                beta = 0.0
                w = rng.standard_normal(n)
                _orthogonalize(V, j, w)
                V[:, j + 1] = w / np.linalg.norm(w)
            else:
                V[:, j + 1] = w / beta
            if j + 1 < ncv:
                T[j + 1, j] = T[j, j + 1] = beta
        theta, S = scipy.linalg.eigh(T)
        res = np.abs(beta * S[ncv - 1, :])
        # a margin so that the explicit residual check passes as well
        done = res[:k] <= 0.1 * tol
        if done.all() or ncv == n or restarts >= max_restarts:
            break
        restarts += 1
        kk = min(ncv - 1, k + (ncv - k) // 2)
        # V[:, :kk] <- V[:, :ncv] S[:, :kk], in row blocks to bound memory
        step = max(1, 4_000_000 // ncv)
        for r0 in range(0, n, step):
            V[r0 : r0 + step, :kk] = V[r0 : r0 + step, :ncv] @ S[:, :kk]
        V[:, kk] = V[:, ncv]
        T = np.zeros((ncv, ncv))
        T[np.arange(kk), np.arange(kk)] = theta[:kk]
        T[kk, :kk] = T[:kk, kk] = beta * S[ncv - 1, :kk]

    Y = np.empty((n, k))
    step = max(1, 4_000_000 // ncv)
    for r0 in range(0, n, step):
        Y[r0 : r0 + step] = V[r0 : r0 + step, :ncv] @ S[:, :k]
    Y /= np.linalg.norm(Y, axis=0)
    thetas = theta[:k].copy()
    true_res = np.empty(k)
    for i in range(k):
        true_res[i] = np.linalg.norm(apply(Y[:, i]) - thetas[i] * Y[:, i])
        matvecs += 1
    converged = true_res <= tol
    result = LanczosResult(thetas, Y, true_res, converged, matvecs, restarts)
    if not converged.all():
        raise ConvergenceError(
            f"{int((~converged).sum())} of {k} eigenpairs above tol={tol} after {restarts} restarts",
            result,
        )
    return result

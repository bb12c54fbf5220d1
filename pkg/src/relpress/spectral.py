"""Log-domain Perron roots of nonnegative matrices.

Matrices are passed as entrywise logarithms (``-inf`` for structural zeros).
The radius is the maximum over strongly connected components; each component
is reduced to a primitive block of its ``d``-th power (``d`` the cyclic
period) and then handled by power iteration with Collatz-Wielandt bounds.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

NEG_INF = -math.inf


def log_matvec(L: np.ndarray, x: np.ndarray) -> np.ndarray:
    z = L + x[None, :]
    m = z.max(axis=1)
    finite = np.isfinite(m)
    out = np.full(L.shape[0], NEG_INF)
    if finite.any():
        zf = z[finite] - m[finite, None]
        out[finite] = m[finite] + np.log(np.exp(zf).sum(axis=1))
    return out


def log_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    ra = A.max(axis=1, keepdims=True)
    cb = B.max(axis=0, keepdims=True)
    ra_f = np.where(np.isfinite(ra), ra, 0.0)
    cb_f = np.where(np.isfinite(cb), cb, 0.0)
    with np.errstate(divide="ignore"):
        prod = np.exp(A - ra_f) @ np.exp(B - cb_f)
        return np.log(prod) + ra_f + cb_f


def _cyclic_period(L: np.ndarray) -> tuple[int, np.ndarray]:
    """Period of an irreducible pattern and the BFS levels used to find it."""
    n = L.shape[0]
    level = np.full(n, -1)
    level[0] = 0
    order = [0]
    for u in order:
        for v in np.flatnonzero(np.isfinite(L[u])):
            if level[v] < 0:
                level[v] = level[u] + 1
                order.append(int(v))
    d = 0
    rows, cols = np.nonzero(np.isfinite(L))
    for u, v in zip(rows, cols):
        d = math.gcd(d, int(abs(level[u] + 1 - level[v])))
    return max(d, 1), level


def _primitive_bracket(L: np.ndarray, tol: float, max_iter: int) -> tuple[float, float]:
    x = np.zeros(L.shape[0])
    exponent = 1
    lo = hi = NEG_INF
    for it in range(max_iter):
        y = log_matvec(L, x)
        ratio = y - x
        lo, hi = ratio.min() / exponent, ratio.max() / exponent
        if hi - lo <= tol * max(1.0, abs(hi)):
            break
        x = y - y.max()
        if it % 16 == 15 and exponent < 2**40:
            L = log_matmul(L, L)
            exponent *= 2
    return lo, hi


def spectral_log_bracket(L, tol: float = 1e-12, max_iter: int = 100_000) -> tuple[float, float]:
    """Certified bounds ``lo <= ln rho <= hi`` (``-inf`` for a nilpotent matrix)."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("need a square matrix")
    n = L.shape[0]
    if n == 0:
        return NEG_INF, NEG_INF
    pattern = csr_matrix(np.isfinite(L).astype(np.int8))
    ncomp, labels = connected_components(pattern, directed=True, connection="strong")
    best = (NEG_INF, NEG_INF)
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        block = L[np.ix_(idx, idx)]
        if not np.isfinite(block).any():
            continue
        d, level = _cyclic_period(block)
        if d > 1:
            power = block
            for _ in range(d - 1):
                power = log_matmul(power, block)
            keep = np.flatnonzero(level % d == 0)
            lo, hi = _primitive_bracket(power[np.ix_(keep, keep)], tol, max_iter)
            lo, hi = lo / d, hi / d
        else:
            lo, hi = _primitive_bracket(block, tol, max_iter)
        if lo + hi > best[0] + best[1]:
            best = (lo, hi)
    return best


def spectral_log_radius(L, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """ln of the spectral radius of ``exp(L)``."""
    lo, hi = spectral_log_bracket(L, tol, max_iter)
    if lo == NEG_INF:
        return NEG_INF
    return 0.5 * (lo + hi)

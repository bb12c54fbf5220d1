"""Finite-range and standard relative pressure quantities.

Everything reduces to one object, a fiber trellis: the states are
``k``-blocks of ``X``, a path of states is a block of ``X``, and the image of
the newest symbol has to match the current letter of the image word. The
weight of a path is the product of edge weights (interior factors) with a
left boundary term on the first state and a right boundary term on the last.

Weight modes:

``phi``        pair weights ``F(b_j b_{j+1})``; needs a potential reading at
               most two coordinates.
``inf``/``sup`` the exact cylinder inf/sup of ``exp f`` at every position.
``canonical``  ``exp f`` evaluated on the least (declared-order) bi-infinite
               extension of the block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import kernels
from .potential import (
    LocallyConstantPotential,
    left_boundary_log,
    log_s,
    log_s_phi,
    pair_weight,
    right_boundary_log,
)
from .spectral import log_matvec, spectral_log_radius
from .symbolic import (
    EventuallyPeriodicPoint,
    FactorCode,
    Sft,
    blocks,
    count_preimage_blocks,
    preimage_blocks,
)

NEG_INF = -math.inf
WEIGHT_MODES = ("phi", "inf", "sup", "canonical")


class NoPreimageError(ValueError):
    """The point (or window) has no preimage point under the code."""


@lru_cache(maxsize=None)
def zero_potential(X: Sft) -> LocallyConstantPotential:
    return LocallyConstantPotential.constant(X, 0.0)


def _potential(code: FactorCode, f) -> LocallyConstantPotential:
    if f is None:
        return zero_potential(code.domain)
    if f.sft is not code.domain:
        raise ValueError("potential and code live on different SFTs")
    return f


def _logsumexp(values) -> float:
    values = [v for v in values if v != NEG_INF]
    if not values:
        return NEG_INF
    m = max(values)
    return m + math.log(math.fsum(math.exp(v - m) for v in values))


def _bit_mask(X: Sft, symbols) -> int:
    mask = 0
    for a in symbols:
        mask |= 1 << X.index[a]
    return mask


class FiberTrellis:
    """Transfer structure for one (code, potential, mode) triple."""

    def __init__(self, code: FactorCode, f: LocallyConstantPotential, mode: str):
        if mode not in WEIGHT_MODES:
            raise ValueError(f"unknown mode {mode!r}")
        X = code.domain
        self.code, self.mode = code, mode
        if mode == "phi":
            self.weights = pair_weight(f)
            self.potential = f
            k = 1
        else:
            self.potential = f.padded()
            k = self.potential.width - 1
        self.k = k
        states = blocks(X, k)
        self.states = states
        index = {s: i for i, s in enumerate(states)}
        img = code.image_index
        self.state_image = np.array([img[code.symbol_map[s[-1]]] for s in states], dtype=np.int32)
        self.state_words = np.array([[img[code.symbol_map[a]] for a in s] for s in states], dtype=np.int32)
        self.state_first = np.array([X.index[s[0]] for s in states], dtype=np.int64)
        self.state_last = np.array([X.index[s[-1]] for s in states], dtype=np.int64)

        indptr = [0]
        indices, logw = [], []
        for s in states:
            for b in X.successors[s[-1]]:
                t = s[1:] + (b,)
                indices.append(index[t])
                if mode == "phi":
                    logw.append(self.weights.log(s[-1], b))
                else:
                    logw.append(self.potential.table[s + (b,)])
            indptr.append(len(indices))
        self.indptr = np.array(indptr, dtype=np.int_)
        self.indices = np.array(indices, dtype=np.int32)
        self.log_weights = np.array(logw, dtype=float)

        if mode == "phi":
            self.left_base = np.zeros(len(states))
            self.right_base = np.zeros(len(states))
        else:
            g = self.potential
            self.left_base = np.array([left_boundary_log(g, s, mode) for s in states])
            self.right_base = np.array([right_boundary_log(g, s, mode) for s in states])

    def block_log_weight(self, B: Sequence) -> float:
        if self.mode == "phi":
            return log_s_phi(self.weights, B)
        return log_s(self.potential, B, self.mode)

    def _brute(self, v: tuple, first_mask: int | None, last_mask: int | None) -> float:
        X = self.code.domain
        terms = []
        for B in preimage_blocks(self.code, v):
            if first_mask is not None and not first_mask >> X.index[B[0]] & 1:
                continue
            if last_mask is not None and not last_mask >> X.index[B[-1]] & 1:
                continue
            terms.append(self.block_log_weight(B))
        return _logsumexp(terms)

    def run(self, v_idx: np.ndarray, first_mask: int | None = None, end_masks=None,
            record: bool = False) -> np.ndarray:
        """Log weights of prefixes of lengths ``k .. n`` of the image word.

        ``v_idx`` holds image-alphabet indices. ``first_mask`` restricts the
        first symbol; ``end_masks`` (an int or one mask per position
        ``k-1 .. n-1``) restricts the last symbol. Only the final entry is
        meaningful unless ``record``.
        """
        k = self.k
        n = len(v_idx)
        T = n - k + 1
        if T <= 0:
            raise ValueError("word shorter than the trellis state length")
        ok = np.all(self.state_words == np.asarray(v_idx[:k])[None, :], axis=1)
        if first_mask is not None:
            bits = np.uint64(first_mask) >> self.state_first.astype(np.uint64)
            ok &= (bits & np.uint64(1)).astype(bool)
        init = np.where(ok, self.left_base, NEG_INF)
        if end_masks is None:
            end_ids = np.zeros(T, dtype=np.int32)
            end_log = self.right_base[None, :]
        else:
            masks = np.asarray(end_masks, dtype=np.uint64)
            if masks.ndim == 0:
                masks = np.full(T, masks, dtype=np.uint64)
            uniq, inv = np.unique(masks, return_inverse=True)
            end_ids = inv.astype(np.int32)
            last = self.state_last.astype(np.uint64)
            end_log = np.stack([np.where((u >> last) & np.uint64(1), self.right_base, NEG_INF) for u in uniq])
        steps = np.ascontiguousarray(v_idx[k - 1 :], dtype=np.int32)
        totals, _, _ = kernels.forward(
            steps, self.state_image, self.indptr, self.indices, self.log_weights,
            np.ascontiguousarray(init), end_ids, np.ascontiguousarray(end_log), record,
        )
        return totals

    def final_vector(self, v_idx: np.ndarray, start_state: int) -> np.ndarray:
        """Log weights (edge factors only) of all paths from one state along ``v_idx``."""
        init = np.full(len(self.states), NEG_INF)
        init[start_state] = 0.0
        steps = np.ascontiguousarray(v_idx, dtype=np.int32)
        end_log = np.zeros((1, len(self.states)))
        _, vec, scale = kernels.forward(
            steps, self.state_image, self.indptr, self.indices, self.log_weights,
            init, np.zeros(len(steps), dtype=np.int32), end_log, False,
        )
        return vec + scale


@lru_cache(maxsize=128)
def _trellis(code: FactorCode, f: LocallyConstantPotential, mode: str) -> FiberTrellis:
    return FiberTrellis(code, f, mode)


def trellis(code: FactorCode, f=None, mode: str = "phi") -> FiberTrellis:
    return _trellis(code, _potential(code, f), mode)


def _image_indices(code: FactorCode, v: Sequence) -> np.ndarray:
    index = code.image_index
    try:
        return np.fromiter((index[c] for c in v), dtype=np.int32, count=len(v))
    except KeyError as exc:
        raise ValueError(f"symbol {exc.args[0]!r} is not in the image alphabet") from None


def _as_word(y, n: int) -> tuple:
    if isinstance(y, EventuallyPeriodicPoint):
        return y.window(0, n - 1)
    if len(y) < n:
        raise ValueError(f"need at least {n} symbols of y")
    return tuple(y[:n])


def log_S(code: FactorCode, f, v: Sequence, mode: str = "phi") -> float:
    """ln S_f(v) (``phi``), ln of the inf-weighted sum (``inf``) or of its sup twin."""
    v = tuple(v)
    if not v:
        raise ValueError("empty word")
    tr = trellis(code, f, mode)
    if len(v) < tr.k:
        code.check_word(v)
        return tr._brute(v, None, None)
    return float(tr.run(_image_indices(code, v))[-1])


def log_S_prefixes(code: FactorCode, f, v: Sequence, mode: str = "phi") -> np.ndarray:
    """``out[n-1] = log_S(v[:n])`` for every n, from one sweep."""
    v = tuple(v)
    tr = trellis(code, f, mode)
    k = tr.k
    out = np.full(len(v), NEG_INF)
    for n in range(1, min(k, len(v) + 1)):
        out[n - 1] = tr._brute(v[:n], None, None)
    if len(v) >= k:
        out[k - 1 :] = tr.run(_image_indices(code, v), record=True)
    return out


def count_preimage_blocks_exact(code: FactorCode, v: Sequence) -> int:
    return count_preimage_blocks(code, tuple(v))


@dataclass(frozen=True)
class FiberSets:
    """Extendable symbol sets ``L_j`` (from the left) and ``R_j`` (to the right)
    for ``start <= j < stop``, as bit masks over the SFT alphabet."""

    sft: Sft
    start: int
    stop: int
    left_masks: np.ndarray = field(repr=False)
    right_masks: np.ndarray = field(repr=False)

    def _symbols(self, mask) -> frozenset:
        mask = int(mask)
        return frozenset(a for i, a in enumerate(self.sft.alphabet) if mask >> i & 1)

    def left(self, j: int) -> frozenset:
        return self._symbols(self.left_masks[j - self.start])

    def right(self, j: int) -> frozenset:
        return self._symbols(self.right_masks[j - self.start])

    def both(self, j: int) -> frozenset:
        return self.left(j) & self.right(j)


def _masks_for(code: FactorCode):
    X = code.domain
    if len(X) > 64:
        raise ValueError("fiber sets support at most 64 symbols")
    fib = np.array([_bit_mask(X, code.fibers[c]) for c in code.image_alphabet], dtype=np.uint64)
    succ = np.array([_bit_mask(X, X.successors[a]) for a in X.alphabet], dtype=np.uint64)
    pred = np.array([_bit_mask(X, X.predecessors[a]) for a in X.alphabet], dtype=np.uint64)
    full = (1 << len(X)) - 1
    return fib, succ, pred, full


def _tail_fixed_point(seq: np.ndarray, fib, nbr, full: int, reverse: bool) -> np.ndarray:
    """Greatest fixed point of the periodic sweep over one period of a tail."""
    boundary = full
    while True:
        out = kernels.mask_sweep(seq, fib, nbr, np.uint64(boundary), reverse)
        new = int(out[0] if reverse else out[-1])
        if new == boundary:
            return out
        boundary = new


def fiber_sets(code: FactorCode, y: EventuallyPeriodicPoint, start: int, stop: int) -> FiberSets:
    """``L_j``/``R_j`` on ``[start, stop)``; raises :class:`NoPreimageError` if y has no lift."""
    if stop <= start:
        raise ValueError("empty range")
    fib, succ, pred, full = _masks_for(code)
    lt = _image_indices(code, y.left_tail)
    rt = _image_indices(code, y.right_tail)
    left_fp = _tail_fixed_point(lt, fib, succ, full, reverse=False)
    right_fp = _tail_fixed_point(rt, fib, pred, full, reverse=True)
    if not left_fp.all() or not right_fp.all():
        raise NoPreimageError("a periodic tail of y has no preimage")
    A = min(start, y.anchor)
    B = max(stop, y.center_end)
    region = _image_indices(code, y.window(A, B - 1))
    before = left_fp[((A - 1) - y.anchor) % len(lt)]
    after = right_fp[(B - y.center_end) % len(rt)]
    L = kernels.mask_sweep(region, fib, succ, np.uint64(before), False)
    R = kernels.mask_sweep(region, fib, pred, np.uint64(after), True)
    sl = slice(start - A, stop - A)
    L, R = L[sl].copy(), R[sl].copy()
    if not L.all() or not R.all():
        raise NoPreimageError("y has no preimage point")
    return FiberSets(code.domain, start, stop, L, R)


def _exact_counts(code: FactorCode, v: tuple, lengths, first=None, last_sets=None) -> dict:
    """Exact path counts over ``v`` at the requested prefix lengths, in one pass.

    ``first`` restricts the first symbol; ``last_sets[j]`` (if given) the
    symbol at position j when the prefix ends there.
    """
    X = code.domain
    wanted = set(lengths)
    out = {}
    counts = {a: 1 for a in code.fibers[v[0]] if first is None or a in first}
    for j in range(len(v)):
        if j:
            counts = {b: sum(counts.get(a, 0) for a in X.predecessors[b]) for b in code.fibers[v[j]]}
            counts = {b: c for b, c in counts.items() if c}
        if j + 1 in wanted:
            last = None if last_sets is None else last_sets(j)
            out[j + 1] = sum(c for b, c in counts.items() if last is None or b in last)
    return out


def count_preimage_prefixes(code: FactorCode, v: Sequence, lengths) -> dict:
    """``{n: |pi^-1(v[:n])|}`` for each requested n, exactly."""
    v = tuple(v)
    code.check_word(v)
    return _exact_counts(code, v, lengths)


def dn_count_prefixes(code: FactorCode, y: EventuallyPeriodicPoint, lengths) -> dict:
    """``{n: |D_n(y)|}`` for each requested n, exactly."""
    lengths = sorted(set(lengths))
    if not lengths or lengths[0] < 1:
        raise ValueError("lengths must be >= 1")
    N = lengths[-1]
    fs = fiber_sets(code, y, 0, N)
    return _exact_counts(code, y.window(0, N - 1), lengths, fs.left(0), fs.right)


def dn_count(code: FactorCode, y: EventuallyPeriodicPoint, n: int) -> int:
    """|D_n(y)|: the number of windows x_[0,n) of points x with pi(x) = y."""
    return dn_count_prefixes(code, y, [n])[n]


def dn_count_widened(code: FactorCode, y, n: int, K: int) -> int:
    """|D_n^(K)(y)|: n-windows of preimage blocks of ``y_[-K, n+K)``.

    Works for any ``y`` with a ``window(a, b)`` method. Nonincreasing in K
    and equal to |D_n(y)| for every large enough K.
    """
    if n < 1 or K < 0:
        raise ValueError("need n >= 1 and K >= 0")
    fib, succ, pred, full = _masks_for(code)
    region = _image_indices(code, y.window(-K, n + K - 1))
    L = kernels.mask_sweep(region, fib, succ, np.uint64(full), False)
    R = kernels.mask_sweep(region, fib, pred, np.uint64(full), True)
    X = code.domain
    first = {a for i, a in enumerate(X.alphabet) if int(L[K]) >> i & 1}
    last = {a for i, a in enumerate(X.alphabet) if int(R[K + n - 1]) >> i & 1}
    return _exact_counts(code, y.window(0, n - 1), [n], first, lambda j: last)[n]


def dn_widened_stabilization(code: FactorCode, y, n: int, max_K: int = 64, patience: int = 8):
    """Grow K until |D_n^(K)| stays put for ``patience`` steps; returns ``(count, K*)``.

    K* is the first K of the final plateau. Without periodic structure this
    is a heuristic stopping rule, not a certificate.
    """
    best, since, K_star = None, 0, 0
    for K in range(max_K + 1):
        c = dn_count_widened(code, y, n, K)
        if c != best:
            best, since, K_star = c, 0, K
        else:
            since += 1
            if since >= patience:
                break
    return best, K_star


def dn_log_weight_prefixes(code: FactorCode, f, y: EventuallyPeriodicPoint, n: int,
                           mode: str = "inf") -> np.ndarray:
    """``out[m-1] = ln sum_{x in D_m(y)} s(x_0 .. x_{m-1})`` for m = 1..n."""
    tr = trellis(code, f, mode)
    fs = fiber_sets(code, y, 0, n)
    v = y.window(0, n - 1)
    first = int(fs.left_masks[0])
    k = tr.k
    out = np.full(n, NEG_INF)
    for m in range(1, min(k, n + 1)):
        out[m - 1] = tr._brute(v[:m], first, int(fs.right_masks[m - 1]))
    if n >= k:
        out[k - 1 :] = tr.run(_image_indices(code, v), first, fs.right_masks[k - 1 :], record=True)
    return out


def dn_log_weight(code: FactorCode, f, y: EventuallyPeriodicPoint, n: int, mode: str = "inf") -> float:
    tr = trellis(code, f, mode)
    fs = fiber_sets(code, y, 0, n)
    v = y.window(0, n - 1)
    first = int(fs.left_masks[0])
    if n < tr.k:
        return tr._brute(v, first, int(fs.right_masks[-1]))
    return float(tr.run(_image_indices(code, v), first, int(fs.right_masks[-1]))[-1])


def estimator_T(code: FactorCode, f, y: EventuallyPeriodicPoint, n: int) -> float:
    return dn_log_weight(code, f, y, n, "inf") / n


def estimator_theta_tilde(code: FactorCode, f, y: EventuallyPeriodicPoint, n: int) -> float:
    return dn_log_weight(code, f, y, n, "sup") / n


def estimator_Phi(code: FactorCode, f, y, n: int) -> float:
    return log_S(code, f, _as_word(y, n), "phi") / n


def estimator_Psi(code: FactorCode, f, y, n: int) -> float:
    return log_S(code, f, _as_word(y, n), "inf") / n


def estimator_Psi_tilde(code: FactorCode, f, y, n: int) -> float:
    return log_S(code, f, _as_word(y, n), "sup") / n


def corollary_estimator(code: FactorCode, f, y, n: int) -> float:
    """(1/n) ln of the sum over preimage blocks of exp(sum f) at canonical representatives."""
    return log_S(code, f, _as_word(y, n), "canonical") / n


def gamma(code: FactorCode, f, y, b, c, n: int) -> float:
    """ln Gamma^n_y(b, c): s-weights of blocks ``b u c`` projecting to y_0 ... y_n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    X = code.domain
    v = _as_word(y, n + 1)
    if code.symbol_map[b] != v[0] or code.symbol_map[c] != v[-1]:
        return NEG_INF
    tr = trellis(code, f, "phi")
    return float(tr.run(_image_indices(code, v), 1 << X.index[b], 1 << X.index[c])[-1])


@dataclass(frozen=True, eq=False)
class WeightedFiberMatrix:
    """Transitions between preimage blocks of a cycle word ``w``.

    ``log_entries[u, v] = ln(s(u) F(u_q v_1))`` when ``uv`` is a block of X.
    """

    word: tuple
    states: tuple
    log_entries: np.ndarray = field(repr=False)
    log_block_weights: np.ndarray = field(repr=False)
    is_reduced: bool = False

    @property
    def period(self) -> int:
        return len(self.word)

    @property
    def size(self) -> int:
        return len(self.states)

    def pattern(self) -> np.ndarray:
        return np.isfinite(self.log_entries).astype(int)

    def reduced(self) -> "WeightedFiberMatrix":
        """Essential part: drop states without incoming or outgoing entries, repeatedly."""
        keep = np.arange(self.size)
        L = self.log_entries
        while True:
            sub = L[np.ix_(keep, keep)]
            fin = np.isfinite(sub)
            ok = fin.any(axis=1) & fin.any(axis=0)
            if ok.all():
                break
            keep = keep[ok]
        return WeightedFiberMatrix(
            self.word,
            tuple(self.states[i] for i in keep),
            L[np.ix_(keep, keep)],
            self.log_block_weights[keep],
            True,
        )

    def path_log_sum(self, n: int) -> float:
        """ln of the sum of s(u_1 ... u_n) over chains of states (= ln S(w^n) unreduced)."""
        if n < 1:
            raise ValueError("n must be >= 1")
        x = self.log_block_weights.copy()
        for _ in range(n - 1):
            x = log_matvec(self.log_entries, x)
        return _logsumexp(x.tolist())


def periodic_matrix(code: FactorCode, f, w: Sequence, cap: int = 5000) -> WeightedFiberMatrix:
    w = tuple(w)
    f = _potential(code, f)
    F = pair_weight(f)
    X = code.domain
    states = preimage_blocks(code, w, cap)
    if not states:
        raise NoPreimageError(f"{w!r} has no preimage block")
    sw = np.array([log_s_phi(F, u) for u in states])
    L = np.full((len(states), len(states)), NEG_INF)
    for i, u in enumerate(states):
        for j, v in enumerate(states):
            if (u[-1], v[0]) in X.edges:
                L[i, j] = sw[i] + F.log(u[-1], v[0])
    return WeightedFiberMatrix(w, tuple(states), L, sw)


def cycle_log_matrix(code: FactorCode, f, w: Sequence, essential: bool = False):
    """Log of the one-period transfer matrix over the fiber of ``w_0``.

    Returns ``(symbols, log_matrix)``. With ``essential`` the rows and
    columns are restricted to symbols that occur at coordinate 0 of some
    preimage of the periodic point ``w^inf``.
    """
    w = tuple(w)
    tr = trellis(code, f, "phi")
    fiber = list(code.fibers[w[0]])
    if essential:
        fs = fiber_sets(code, EventuallyPeriodicPoint.periodic(w), 0, 1)
        keep = fs.both(0)
        fiber = [a for a in fiber if a in keep]
        if not fiber:
            raise NoPreimageError(f"the periodic point of {w!r} has no preimage")
    v_idx = _image_indices(code, w + (w[0],))
    state_of = {s[0]: i for i, s in enumerate(tr.states)}
    cols = [state_of[a] for a in fiber]
    rows = [tr.final_vector(v_idx, state_of[a])[cols] for a in fiber]
    return tuple(fiber), np.array(rows).reshape(len(fiber), len(fiber))


@dataclass(frozen=True)
class PeriodicValues:
    phi_exact: float
    T_exact: float
    preimage_count: int
    reduced_size: int
    method: str


def periodic_values(code: FactorCode, f, w: Sequence, method: str = "auto",
                    cap: int = 400, diagnostics: bool = True) -> PeriodicValues:
    """Exact growth rates at the periodic point ``w^inf``.

    ``phi_exact`` comes from all preimage blocks of ``w``, ``T_exact`` from
    the essential ones only. ``blocks`` builds the block matrix and its
    reduction explicitly; ``trellis`` uses the one-period transfer matrix over
    a single fiber, which has the same nonzero spectrum.
    """
    w = tuple(w)
    q = len(w)
    if q == 0:
        raise ValueError("empty cycle word")
    if (w[-1], w[0]) not in code.image_edges:
        raise ValueError(f"{w!r} is not a cycle word of the image")
    if diagnostics or method == "blocks":
        count = count_preimage_blocks(code, w)
        small = count <= cap
    else:
        log_count = log_S(code, None, w, "phi")
        count = -1 if log_count != NEG_INF else 0
        small = log_count <= math.log(cap)
    if count == 0:
        raise NoPreimageError(f"{w!r} has no preimage block")
    if method == "auto":
        method = "blocks" if small else "trellis"
    if method == "blocks":
        A = periodic_matrix(code, f, w, cap=max(cap, count))
        B = A.reduced()
        if B.size == 0:
            raise NoPreimageError("no periodic preimage orbit")
        phi = spectral_log_radius(A.log_entries) / q
        T = spectral_log_radius(B.log_entries) / q
        return PeriodicValues(float(phi), float(T), A.size, B.size, method)
    if method == "trellis":
        _, P = cycle_log_matrix(code, f, w)
        _, Pe = cycle_log_matrix(code, f, w, essential=True)
        phi = spectral_log_radius(P) / q
        T = spectral_log_radius(Pe) / q
        if diagnostics:
            essential = dn_count(code, EventuallyPeriodicPoint.periodic(w), q)
        else:
            essential = -1
        return PeriodicValues(float(phi), float(T), count, essential, method)
    raise ValueError(f"unknown method {method!r}")

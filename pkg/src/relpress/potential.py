"""Locally constant potentials and the block weights built from them.

A potential reads the window ``x_lo ... x_hi`` (``lo <= 0 <= hi``). All
weights are handled as natural logarithms; ``exp`` is only taken by callers
that want the raw factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

from .symbolic import Sft, blocks

MAX_RADIUS = 4
MODES = ("inf", "sup", "canonical")


@dataclass(frozen=True, eq=False)
class LocallyConstantPotential:
    """``f(x) = table[x_lo ... x_hi]`` on an SFT, plus the normalisation offset.

    ``shift_constant`` records the ``c`` already added by
    :func:`normalize_nonneg`, so that values of ``f`` itself are
    ``table - shift_constant``.
    """

    sft: Sft
    lo: int
    hi: int
    table: dict = field(repr=False)
    shift_constant: float = 0.0

    def __post_init__(self):
        if not self.lo <= 0 <= self.hi:
            raise ValueError("the window must contain coordinate 0")
        if self.radius > MAX_RADIUS:
            raise ValueError(f"window radius {self.radius} exceeds the cap {MAX_RADIUS}")
        allowed = set(blocks(self.sft, self.width))
        keys = set(self.table)
        if keys != allowed:
            extra = keys - allowed
            missing = allowed - keys
            raise ValueError(
                f"table must cover exactly the allowed {self.width}-words "
                f"(missing {sorted(map(str, missing))[:3]}, extra {sorted(map(str, extra))[:3]})"
            )
        if not all(math.isfinite(v) for v in self.table.values()):
            raise ValueError("table values must be finite")

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    @property
    def radius(self) -> int:
        return max(-self.lo, self.hi)

    @property
    def log_bound(self) -> float:
        """ln M, where M bounds exp f from above."""
        return max(self.table.values())

    @property
    def bound(self) -> float:
        return math.exp(self.log_bound)

    @property
    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.table.values())

    def __call__(self, window: Sequence) -> float:
        return self.table[tuple(window)]

    @classmethod
    def constant(cls, X: Sft, value: float = 0.0) -> "LocallyConstantPotential":
        return cls(X, 0, 0, {(a,): float(value) for a in X.alphabet})

    @classmethod
    def from_radius(cls, X: Sft, m: int, table: dict) -> "LocallyConstantPotential":
        return cls(X, -m, m, {tuple(k): float(v) for k, v in table.items()})

    @classmethod
    def from_function(cls, X: Sft, lo: int, hi: int, func: Callable) -> "LocallyConstantPotential":
        return cls(X, lo, hi, {w: float(func(w)) for w in blocks(X, hi - lo + 1)})

    def padded(self) -> "LocallyConstantPotential":
        """Same function with a window of at least two coordinates."""
        if self.width >= 2:
            return self
        X = self.sft
        table = {w + (b,): v for w, v in self.table.items() for b in X.successors[w[-1]]}
        return LocallyConstantPotential(X, self.lo, self.hi + 1, table, self.shift_constant)


def normalize_nonneg(f: LocallyConstantPotential) -> LocallyConstantPotential:
    """Shift ``f`` by ``c = -min(table)`` so the smallest value is exactly 0."""
    c = -min(f.table.values())
    if c == 0.0:
        return f
    table = {w: v + c for w, v in f.table.items()}
    # exact zero at the minimiser, independent of rounding in v + c
    lowest = min(f.table.values())
    for w, v in f.table.items():
        if v == lowest:
            table[w] = 0.0
    return LocallyConstantPotential(f.sft, f.lo, f.hi, table, f.shift_constant + c)


@dataclass(frozen=True)
class PairWeight:
    """``ln F(b0 b1)`` on the allowed 2-words."""

    log_table: dict

    def __call__(self, a, b) -> float:
        return math.exp(self.log_table[(a, b)])

    def log(self, a, b) -> float:
        return self.log_table[(a, b)]


def pair_weight(f: LocallyConstantPotential) -> PairWeight:
    if f.width > 2:
        raise ValueError(
            f"potential reads {f.width} coordinates; recode to pair form first (see to_pair_form)"
        )
    g = f.padded()
    return PairWeight(dict(g.table))


def log_s_phi(F: PairWeight, B: Sequence) -> float:
    """ln of F(b1 b2) ... F(b_{n-1} b_n); 0 for a single symbol."""
    if not B:
        raise ValueError("empty block")
    try:
        return math.fsum(F.log_table[(B[j], B[j + 1])] for j in range(len(B) - 1))
    except KeyError as exc:
        raise ValueError(f"{tuple(B)!r} is not a block of X") from exc


@lru_cache(maxsize=None)
def _left_paths(X: Sft, b, length: int) -> tuple:
    """All words ``e`` of the given length with ``e b`` allowed."""
    if length == 0:
        return ((),)
    out = []
    for a in X.predecessors[b]:
        for e in _left_paths(X, a, length - 1):
            out.append(e + (a,))
    return tuple(out)


@lru_cache(maxsize=None)
def _right_paths(X: Sft, b, length: int) -> tuple:
    if length == 0:
        return ((),)
    out = []
    for a in X.successors[b]:
        for e in _right_paths(X, a, length - 1):
            out.append((a,) + e)
    return tuple(out)


@lru_cache(maxsize=None)
def canonical_left(X: Sft, b, length: int) -> tuple:
    """Greedy least-predecessor extension of length ``length`` ending before ``b``."""
    out = []
    cur = b
    for _ in range(length):
        cur = X.predecessors[cur][0]
        out.append(cur)
    return tuple(reversed(out))


@lru_cache(maxsize=None)
def canonical_right(X: Sft, b, length: int) -> tuple:
    out = []
    cur = b
    for _ in range(length):
        cur = X.successors[cur][0]
        out.append(cur)
    return tuple(out)


def boundary_log(f: LocallyConstantPotential, part: tuple, left: int, right: int, mode: str) -> float:
    """ln of the inf/sup/canonical value of exp f over completions of ``part``.

    ``part`` is the portion of the window inside the block; ``left``/``right``
    symbols are missing on either side and range over allowed extensions.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if left == 0 and right == 0:
        return f.table[part]
    X = f.sft
    if mode == "canonical":
        word = canonical_left(X, part[0], left) + part + canonical_right(X, part[-1], right)
        return f.table[word]
    lefts = _left_paths(X, part[0], left)
    rights = _right_paths(X, part[-1], right)
    values = (f.table[e + part + r] for e in lefts for r in rights)
    return min(values) if mode == "inf" else max(values)


def log_windowed_weight(f: LocallyConstantPotential, B: Sequence, i: int, mode: str) -> float:
    """ln F_n^i(B) (mode ``inf``), ln of its sup analogue, or the canonical value."""
    B = tuple(B)
    n = len(B)
    if not 0 <= i < n:
        raise ValueError("position out of range")
    if not f.sft.is_word(B):
        raise ValueError(f"{B!r} is not a block of X")
    start, stop = i + f.lo, i + f.hi + 1
    part = B[max(0, start) : min(n, stop)]
    return boundary_log(f, part, max(0, -start), max(0, stop - n), mode)


def windowed_weight(f: LocallyConstantPotential, B: Sequence, i: int, mode: str = "inf") -> float:
    return math.exp(log_windowed_weight(f, B, i, mode))


def log_s(f: LocallyConstantPotential, B: Sequence, mode: str = "inf") -> float:
    """ln of the product over i of the windowed weights of B."""
    return math.fsum(log_windowed_weight(f, B, i, mode) for i in range(len(B)))


def log_s_inf(f: LocallyConstantPotential, B: Sequence) -> float:
    return log_s(f, B, "inf")


def log_s_sup(f: LocallyConstantPotential, B: Sequence) -> float:
    return log_s(f, B, "sup")


def left_boundary_log(f: LocallyConstantPotential, state: tuple, mode: str) -> float:
    """Sum of the left-truncated factors of any long block starting with ``state``.

    ``state`` must have length ``f.width - 1``.
    """
    total = 0.0
    for i in range(-f.lo):
        total += boundary_log(f, state[: i + f.hi + 1], -(i + f.lo), 0, mode)
    return total


def right_boundary_log(f: LocallyConstantPotential, state: tuple, mode: str) -> float:
    """Sum of the right-truncated factors of any long block ending with ``state``."""
    k = len(state)
    total = 0.0
    for t in range(k - f.hi, k):
        total += boundary_log(f, state[t + f.lo :], 0, t + f.hi - (k - 1), mode)
    return total


def recode_potential(f: LocallyConstantPotential, Xk: Sft, dictionary) -> LocallyConstantPotential:
    """Carry ``f`` over to a k-block recoding made by ``higher_block_recode``."""
    k = dictionary.k
    a = dictionary.anchor or 0
    lo = f.lo + a
    hi = max(lo, f.hi + a - k + 1)
    if not lo <= 0 <= hi:
        raise ValueError("recoded window does not contain coordinate 0; choose another anchor")
    table = {}
    for W in blocks(Xk, hi - lo + 1):
        original = dictionary.decode(W)
        table[W] = f.table[original[: f.width]]
    return LocallyConstantPotential(Xk, lo, hi, table, f.shift_constant)


def to_pair_form(code, f: LocallyConstantPotential):
    """Return ``(code', f')`` with ``f'`` reading two coordinates.

    Wide windows are absorbed by an anchored higher-block recoding, which keeps
    the image alphabet and all image words unchanged.
    """
    from .symbolic import higher_block_recode

    if f.width <= 2:
        return code, f.padded()
    k = f.width - 1
    anchor = -f.lo if f.hi >= 1 else -f.lo - 1
    Xk, code_k, dictionary = higher_block_recode(code.domain, code, k, anchor=anchor)
    return code_k, recode_potential(f, Xk, dictionary)

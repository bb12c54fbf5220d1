"""Shifts of finite type, 1-block factor codes and eventually periodic points.

Symbols are opaque hashable values. Every order-dependent result (block
enumeration, canonical extensions, tie-breaks) follows the declared alphabet
order, never a sort of the symbols themselves.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np

Symbol = Hashable
Word = tuple

DEFAULT_ENUMERATION_CAP = 10**6


class DegenerateSystemError(ValueError):
    """Raised when trimming leaves no symbols."""


class EnumerationCapError(RuntimeError):
    """Raised when an enumeration would exceed the configured block cap."""


@dataclass(frozen=True, eq=False)
class Sft:
    """A 1-step shift of finite type given by an allowed-transition relation.

    Instances built through :func:`make_sft` are trimmed, i.e. every symbol has
    a predecessor and a successor, so every allowed path is a block of ``X``.
    """

    alphabet: tuple
    edges: frozenset
    removed: tuple = ()

    @cached_property
    def index(self) -> dict:
        return {a: i for i, a in enumerate(self.alphabet)}

    @cached_property
    def successors(self) -> dict:
        succ = {a: [] for a in self.alphabet}
        for a in self.alphabet:
            for b in self.alphabet:
                if (a, b) in self.edges:
                    succ[a].append(b)
        return {a: tuple(v) for a, v in succ.items()}

    @cached_property
    def predecessors(self) -> dict:
        pred = {a: [] for a in self.alphabet}
        for b in self.alphabet:
            for a in self.alphabet:
                if (a, b) in self.edges:
                    pred[b].append(a)
        return {a: tuple(v) for a, v in pred.items()}

    @cached_property
    def adjacency(self) -> np.ndarray:
        n = len(self.alphabet)
        adj = np.zeros((n, n), dtype=np.int64)
        for a, b in self.edges:
            adj[self.index[a], self.index[b]] = 1
        return adj

    def allows(self, a, b) -> bool:
        return (a, b) in self.edges

    def is_word(self, word: Sequence) -> bool:
        if any(s not in self.index for s in word):
            return False
        return all((word[i], word[i + 1]) in self.edges for i in range(len(word) - 1))

    def __len__(self) -> int:
        return len(self.alphabet)

    def __repr__(self) -> str:
        return f"Sft(alphabet={list(self.alphabet)!r}, edges={len(self.edges)})"


def make_sft(alphabet: Iterable, edges: Iterable) -> Sft:
    """Build a trimmed SFT, dropping inessential symbols until none remain.

    >>> X = make_sft([1, 2, 3], [(1, 1), (1, 2), (2, 3)])
    >>> X.alphabet, X.removed
    ((1,), (3, 2))
    """
    alphabet = tuple(dict.fromkeys(alphabet))
    if not alphabet:
        raise DegenerateSystemError("empty alphabet")
    known = set(alphabet)
    edge_set = set()
    for a, b in edges:
        if a not in known or b not in known:
            raise ValueError(f"edge {a!r}->{b!r} uses a symbol outside the alphabet")
        edge_set.add((a, b))

    alive = list(alphabet)
    removed = []
    while True:
        live = set(alive)
        has_out = {a for a, b in edge_set if b in live and a in live}
        has_in = {b for a, b in edge_set if a in live and b in live}
        dead = [a for a in alive if a not in has_out or a not in has_in]
        if not dead:
            break
        removed.extend(dead)
        alive = [a for a in alive if a not in set(dead)]
    if not alive:
        raise DegenerateSystemError("no essential symbols remain after trimming")
    live = set(alive)
    kept = frozenset((a, b) for a, b in edge_set if a in live and b in live)
    return Sft(tuple(alive), kept, tuple(removed))


def is_irreducible(X: Sft) -> bool:
    """True iff the transition graph is strongly connected."""

    def reach(start, nbrs):
        seen = {start}
        todo = [start]
        while todo:
            a = todo.pop()
            for b in nbrs[a]:
                if b not in seen:
                    seen.add(b)
                    todo.append(b)
        return seen

    root = X.alphabet[0]
    return len(reach(root, X.successors)) == len(X) and len(reach(root, X.predecessors)) == len(X)


def count_blocks(X: Sft, n: int) -> int:
    """|B_n(X)| by the transfer recurrence (exact integers)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    counts = {a: 1 for a in X.alphabet}
    for _ in range(n - 1):
        nxt = dict.fromkeys(X.alphabet, 0)
        for a, c in counts.items():
            for b in X.successors[a]:
                nxt[b] += c
        counts = nxt
    return sum(counts.values())


def blocks(X: Sft, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> list:
    """All allowed words of length ``n`` in declared-order lexicographic order."""
    total = count_blocks(X, n)
    if total > cap:
        raise EnumerationCapError(f"|B_{n}(X)| = {total} exceeds cap {cap}")
    return _paths(X, n, None)


def _paths(X: Sft, n: int, allowed) -> list:
    """Lexicographic enumeration of length-n paths, optionally restricted per position."""
    out = []
    first = [a for a in X.alphabet if allowed is None or a in allowed(0)]
    path = []
    stack = [iter(first)]
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            if path:
                path.pop()
            continue
        path.append(nxt)
        if len(path) == n:
            out.append(tuple(path))
            path.pop()
            continue
        j = len(path)
        stack.append(iter([b for b in X.successors[nxt] if allowed is None or b in allowed(j)]))
    return out


@dataclass(frozen=True, eq=False)
class FactorCode:
    """A 1-block code ``pi`` on ``domain``; the image presentation is ``pi(X)``."""

    domain: Sft
    symbol_map: dict = field(repr=False)

    def __post_init__(self):
        missing = [a for a in self.domain.alphabet if a not in self.symbol_map]
        if missing:
            raise ValueError(f"code is not defined on {missing!r}")

    @cached_property
    def image_alphabet(self) -> tuple:
        return tuple(dict.fromkeys(self.symbol_map[a] for a in self.domain.alphabet))

    @cached_property
    def image_index(self) -> dict:
        return {c: i for i, c in enumerate(self.image_alphabet)}

    @cached_property
    def image_edges(self) -> frozenset:
        return frozenset((self.symbol_map[a], self.symbol_map[b]) for a, b in self.domain.edges)

    @cached_property
    def fibers(self) -> dict:
        """Image symbol -> tuple of domain symbols mapping to it (declared order)."""
        fib = {c: [] for c in self.image_alphabet}
        for a in self.domain.alphabet:
            fib[self.symbol_map[a]].append(a)
        return {c: tuple(v) for c, v in fib.items()}

    def __call__(self, word: Sequence) -> tuple:
        return tuple(self.symbol_map[a] for a in word)

    def is_image_word(self, v: Sequence) -> bool:
        """Membership in the image edge relation (necessary, not sufficient, for v in Y)."""
        if any(c not in self.image_index for c in v):
            return False
        return all((v[i], v[i + 1]) in self.image_edges for i in range(len(v) - 1))

    def check_word(self, v: Sequence) -> None:
        bad = [c for c in v if c not in self.image_index]
        if bad:
            raise ValueError(f"symbols {bad!r} are not in the image alphabet")


def make_code(X: Sft, mapping: dict) -> FactorCode:
    return FactorCode(X, {a: mapping[a] for a in X.alphabet})


def identity_code(X: Sft) -> FactorCode:
    return FactorCode(X, {a: a for a in X.alphabet})


def count_preimage_blocks(code: FactorCode, v: Sequence) -> int:
    """|pi^{-1}(v)| by an exact integer DP over the fibers."""
    code.check_word(v)
    if not v:
        return 0
    X = code.domain
    counts = {a: 1 for a in code.fibers[v[0]]}
    for c in v[1:]:
        fib = code.fibers[c]
        counts = {b: sum(counts.get(a, 0) for a in X.predecessors[b]) for b in fib}
    return sum(counts.values())


def preimage_blocks(code: FactorCode, v: Sequence, cap: int = DEFAULT_ENUMERATION_CAP) -> list:
    """All X-blocks projecting to ``v``, in declared-order lexicographic order."""
    code.check_word(v)
    n = len(v)
    if n == 0:
        return []
    total = count_preimage_blocks(code, v)
    if total > cap:
        raise EnumerationCapError(f"|pi^-1(v)| = {total} exceeds cap {cap}")
    X = code.domain
    # alive[j]: symbols at position j that can be completed to the right end
    alive = [set() for _ in range(n)]
    alive[-1] = set(code.fibers[v[-1]])
    for j in range(n - 2, -1, -1):
        alive[j] = {a for a in code.fibers[v[j]] if any(b in alive[j + 1] for b in X.successors[a])}
    return _paths(X, n, lambda j: alive[j])


@dataclass(frozen=True)
class BlockDictionary:
    """Translation between words of a k-block recoding and the original system.

    With ``anchor=None`` the image is recoded too (symbols become k-tuples of
    image symbols) and preimage sets correspond bijectively. With an integer
    anchor the recoded code reads coordinate ``anchor`` of each block, so the
    image alphabet and image words are unchanged.
    """

    k: int
    anchor: int | None = None

    def encode(self, word: Sequence) -> tuple:
        k = self.k
        if len(word) < k:
            raise ValueError(f"word shorter than block length {k}")
        return tuple(tuple(word[i : i + k]) for i in range(len(word) - k + 1))

    def decode(self, word: Sequence) -> tuple:
        if not word:
            return ()
        return tuple(word[0]) + tuple(b[-1] for b in word[1:])

    def encode_image(self, v: Sequence) -> tuple:
        if self.anchor is not None:
            return tuple(v)
        return self.encode(v)

    def decode_image(self, v: Sequence) -> tuple:
        if self.anchor is not None:
            return tuple(v)
        return self.decode(v)


def higher_block_recode(X: Sft, code: FactorCode, k: int, anchor: int | None = None):
    """k-block presentation of ``X`` with the induced 1-block code.

    Returns ``(X_k, code_k, dictionary)``. The recoded symbol at coordinate i
    is the original block ``x_{i-a} ... x_{i-a+k-1}`` where ``a`` is the anchor
    (0 when the image is block-recoded).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if anchor is not None and not 0 <= anchor < k:
        raise ValueError("anchor must lie in [0, k)")
    states = blocks(X, k)
    edges = [(u, w) for u in states for w in states if u[1:] == w[:-1] and (u[-1], w[-1]) in X.edges]
    Xk = Sft(tuple(states), frozenset(edges))
    if anchor is None:
        mapping = {u: code(u) for u in states}
    else:
        mapping = {u: code.symbol_map[u[anchor]] for u in states}
    return Xk, FactorCode(Xk, mapping), BlockDictionary(k, anchor)


@dataclass(frozen=True)
class EventuallyPeriodicPoint:
    """``... L L L center R R R ...`` with ``center[0]`` at coordinate ``anchor``.

    The left tail is aligned so that its last symbol sits at ``anchor - 1``;
    the right tail starts right after the center.
    """

    left_tail: tuple
    center: tuple
    right_tail: tuple
    anchor: int = 0

    def __post_init__(self):
        if not self.left_tail or not self.right_tail:
            raise ValueError("tails must be nonempty")

    @classmethod
    def periodic(cls, word: Sequence) -> "EventuallyPeriodicPoint":
        """The point ``... w . w w ...`` with ``w[0]`` at coordinate 0."""
        w = tuple(word)
        return cls(w, (), w, 0)

    @property
    def center_end(self) -> int:
        return self.anchor + len(self.center)

    @property
    def is_periodic(self) -> bool:
        return not self.center and self.left_tail == self.right_tail

    def __getitem__(self, i: int):
        if i < self.anchor:
            return self.left_tail[(i - self.anchor) % len(self.left_tail)]
        if i < self.center_end:
            return self.center[i - self.anchor]
        return self.right_tail[(i - self.center_end) % len(self.right_tail)]

    def window(self, a: int, b: int) -> tuple:
        """Symbols on the closed interval [a, b]."""
        if a > b:
            raise ValueError("need a <= b")
        out = []
        i = a
        if i < self.anchor:
            stop = min(b + 1, self.anchor)
            out.extend(_periodic_slice(self.left_tail, i - self.anchor, stop - self.anchor))
            i = stop
        if i <= b and i < self.center_end:
            stop = min(b + 1, self.center_end)
            out.extend(self.center[i - self.anchor : stop - self.anchor])
            i = stop
        if i <= b:
            out.extend(_periodic_slice(self.right_tail, i - self.center_end, b + 1 - self.center_end))
        return tuple(out)

    def check(self, code: FactorCode) -> None:
        """Every junction must be an allowed image transition."""
        lt, rt = self.left_tail, self.right_tail
        seq = lt + lt + self.center + rt + rt
        if not code.is_image_word(seq):
            raise ValueError("point is not a valid sequence of the image presentation")


def _periodic_slice(tail: tuple, start: int, stop: int) -> tuple:
    """``tail`` repeated in both directions, restricted to ``[start, stop)``."""
    p = len(tail)
    offset = start % p
    reps = (offset + stop - start) // p + 1
    return (tail * reps)[offset : offset + stop - start]


def point_window(y: EventuallyPeriodicPoint, a: int, b: int) -> tuple:
    return y.window(a, b)


def random_irreducible_sft(rng, max_symbols: int = 6, density: float = 0.45, min_symbols: int = 2) -> Sft:
    """Random trimmed irreducible SFT on integer symbols (test/experiment helper)."""
    while True:
        n = int(rng.integers(min_symbols, max_symbols + 1))
        edges = [(a, b) for a, b in itertools.product(range(n), repeat=2) if rng.random() < density]
        try:
            X = make_sft(range(n), edges)
        except DegenerateSystemError:
            continue
        if len(X) >= min_symbols and is_irreducible(X):
            return X


def random_onto_code(rng, X: Sft, max_image: int = 3) -> FactorCode:
    r = int(rng.integers(1, min(max_image, len(X)) + 1))
    labels = list(range(r)) + [int(rng.integers(0, r)) for _ in range(len(X) - r)]
    rng.shuffle(labels)
    names = "abcdefgh"
    return FactorCode(X, {a: names[labels[i]] for i, a in enumerate(X.alphabet)})


def random_cycle(rng, X: Sft, q: int, tries: int = 1000) -> tuple:
    """A random closed path ``x_0 ... x_{q-1}`` (with ``x_{q-1} -> x_0`` allowed)."""
    for _ in range(tries):
        path = [X.alphabet[int(rng.integers(len(X)))]]
        for _ in range(q - 1):
            succ = X.successors[path[-1]]
            path.append(succ[int(rng.integers(len(succ)))])
        if (path[-1], path[0]) in X.edges:
            return tuple(path)
    raise RuntimeError(f"no closed path of length {q} found")


def shortest_connector(X: Sft, source, target) -> tuple:
    """Lexicographically least shortest word ``c`` with ``source c target`` allowed."""
    dist = {target: 0}
    todo = deque([target])
    while todo:
        b = todo.popleft()
        for a in X.predecessors[b]:
            if a not in dist:
                dist[a] = dist[b] + 1
                todo.append(a)
    options = [dist[b] for b in X.successors[source] if b in dist]
    if not options:
        raise ValueError(f"{target!r} is not reachable from {source!r}")
    remaining = 1 + min(options)
    path = []
    cur = source
    while remaining > 1:
        cur = next(b for b in X.successors[cur] if dist.get(b) == remaining - 1)
        path.append(cur)
        remaining -= 1
    return tuple(path)

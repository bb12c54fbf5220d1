"""The divergence example: a factor of a five-symbol SFT onto a two-letter sofic shift.

The point ``y = ...222.1 2^{a_1} 1 2^{a_2} 1 ...`` with ``a_k = 2^k + 1`` has
exactly one preimage, yet the number of preimage words of its prefixes grows
doubly exponentially along ``n_k``.
"""

from __future__ import annotations

import math

from .potential import LocallyConstantPotential
from .symbolic import EventuallyPeriodicPoint, FactorCode, Sft, make_sft

ALPHABET = ("1", "2", "3", "4", "5")
EDGES = (
    ("1", "2"), ("1", "3"), ("2", "1"), ("2", "2"), ("3", "4"),
    ("3", "5"), ("4", "3"), ("5", "3"), ("4", "1"),
)
CODE = {"1": "1", "2": "2", "3": "2", "4": "2", "5": "2"}
LIMIT = math.log(2) / 4


def system() -> tuple[Sft, FactorCode]:
    X = make_sft(ALPHABET, EDGES)
    return X, FactorCode(X, dict(CODE))


def zero_potential(X: Sft) -> LocallyConstantPotential:
    return LocallyConstantPotential.constant(X, 0.0)


def a(k: int) -> int:
    return 2**k + 1


def n_k(k: int) -> int:
    """Length of ``1 2^{a_1} 1 ... 1 2^{a_k}``."""
    return 2 ** (k + 1) + 2 * k - 2


def expected_count(k: int) -> int:
    return 2 ** (2 ** (k - 1)) + 1


def closed_form_estimate(k: int) -> float:
    """``ln(2^{2^{k-1}} + 1) / n_k`` without forming the big integer."""
    e = 2 ** (k - 1)
    return (e * math.log(2) + math.log1p(2.0**-e)) / n_k(k)


def kmax_for(n: int) -> int:
    """Smallest k with ``n_k >= n``."""
    k = 1
    while n_k(k) < n:
        k += 1
    return k


def point(kmax: int) -> EventuallyPeriodicPoint:
    """The point, exact on coordinates ``[0, n_kmax]`` and beyond.

    The centre stops after the ``1`` that closes ``2^{a_kmax}``; the right tail
    is ``2^inf``. Since ``1`` has a single preimage, fibers left of that ``1``
    agree with those of the infinite point.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    parts = ["1"]
    for k in range(1, kmax + 1):
        parts.append("2" * a(k) + "1")
    return EventuallyPeriodicPoint(("2",), tuple("".join(parts)), ("2",), 0)

"""Property-based checks over randomly generated small systems."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from relpress.potential import LocallyConstantPotential, log_s, log_windowed_weight, normalize_nonneg
from relpress.pressure import count_preimage_blocks_exact, gamma, log_S
from relpress.symbolic import (
    DegenerateSystemError,
    FactorCode,
    blocks,
    count_preimage_blocks,
    higher_block_recode,
    make_sft,
    preimage_blocks,
)

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def systems(draw, max_symbols=4, image_size=2):
    n = draw(st.integers(1, max_symbols))
    alphabet = [str(i) for i in range(n)]
    edges = [(a, b) for a in alphabet for b in alphabet if draw(st.booleans())]
    try:
        X = make_sft(alphabet, edges)
    except (DegenerateSystemError, ValueError):
        X = make_sft(alphabet, [(a, b) for a in alphabet for b in alphabet])
    images = "ab"[:image_size]
    code = FactorCode(X, {a: draw(st.sampled_from(images)) for a in X.alphabet})
    return X, code


@st.composite
def systems_with_potential(draw, window=(0, 1)):
    X, code = draw(systems())
    vals = draw(st.lists(st.floats(0, 1), min_size=len(blocks(X, window[1] - window[0] + 1)),
                         max_size=len(blocks(X, window[1] - window[0] + 1))))
    table = dict(zip(blocks(X, window[1] - window[0] + 1), vals))
    return X, code, LocallyConstantPotential(X, window[0], window[1], table)


@st.composite
def image_words(draw, code, max_len=6):
    X = code.domain
    n = draw(st.integers(1, max_len))
    x = [draw(st.sampled_from(X.alphabet))]
    for _ in range(n - 1):
        x.append(draw(st.sampled_from(X.successors[x[-1]])))
    return code(x)


def lse(xs):
    xs = list(xs)
    if not xs:
        return -math.inf
    m = max(xs)
    return m + math.log(math.fsum(math.exp(x - m) for x in xs))


@SETTINGS
@given(systems())
def test_trim_idempotent(sys_):
    X, _ = sys_
    again = make_sft(X.alphabet, X.edges)
    assert again.alphabet == X.alphabet and again.edges == X.edges
    assert all(X.successors[a] and X.predecessors[a] for a in X.alphabet)


@SETTINGS
@given(systems(), st.integers(1, 5))
def test_block_counts_follow_matrix_powers(sys_, n):
    X, _ = sys_
    A = X.adjacency.astype(np.int64)
    one = np.ones(len(X), dtype=np.int64)
    assert len(blocks(X, n)) == int(one @ np.linalg.matrix_power(A, n - 1) @ one)


@SETTINGS
@given(st.data())
def test_preimages_and_counts(data):
    X, code = data.draw(systems())
    v = data.draw(image_words(code))
    pre = preimage_blocks(code, v)
    brute = [B for B in blocks(X, len(v)) if code(B) == v]
    assert pre == brute
    assert count_preimage_blocks(code, v) == count_preimage_blocks_exact(code, v) == len(brute)
    if brute:
        assert abs(log_S(code, None, v) - math.log(len(brute))) < 1e-12
    else:
        assert log_S(code, None, v) == -math.inf


@SETTINGS
@given(st.data(), st.sampled_from(["phi", "inf", "sup", "canonical"]))
def test_log_S_matches_enumeration(data, mode):
    X, code, f = data.draw(systems_with_potential())
    v = data.draw(image_words(code))
    ref = lse(log_s(f, B, mode) if mode != "phi" else sum(f.table[B[i : i + 2]] for i in range(len(B) - 1))
              for B in blocks(X, len(v)) if code(B) == v)
    got = log_S(code, f, v, mode)
    assert got == ref or abs(got - ref) <= 1e-9 * max(1.0, abs(ref))


@SETTINGS
@given(st.data())
def test_inf_sup_bracket(data):
    X, code, f = data.draw(systems_with_potential(window=(-1, 1)))
    n = data.draw(st.integers(1, 4))
    for B in blocks(X, n)[:20]:
        for i in range(n):
            lo = log_windowed_weight(f, B, i, "inf")
            hi = log_windowed_weight(f, B, i, "sup")
            assert 0.0 <= lo <= hi <= f.log_bound
        assert log_s(f, B, "inf") <= log_s(f, B, "canonical") + 1e-12 <= log_s(f, B, "sup") + 2e-12


@SETTINGS
@given(st.data())
def test_gamma_marginal(data):
    X, code, f = data.draw(systems_with_potential())
    v = data.draw(image_words(code, max_len=6))
    if len(v) < 2:
        return
    total = lse(gamma(code, f, v, b, c, len(v) - 1) for b in X.alphabet for c in X.alphabet)
    ref = log_S(code, f, v)
    assert total == ref or abs(total - ref) <= 1e-9


@SETTINGS
@given(st.data())
def test_recoding_bijects_preimages(data):
    X, code = data.draw(systems())
    v = data.draw(image_words(code, max_len=5))
    if len(v) < 2:
        return
    X2, code2, d = higher_block_recode(X, code, 2)
    pre2 = preimage_blocks(code2, d.encode_image(v))
    assert sorted(d.decode(u) for u in pre2) == preimage_blocks(code, v)


@SETTINGS
@given(systems(), st.lists(st.floats(-5, 5), min_size=1, max_size=64))
def test_normalisation(sys_, vals):
    X, _ = sys_
    bs = blocks(X, 1)
    table = {b: vals[i % len(vals)] for i, b in enumerate(bs)}
    g = normalize_nonneg(LocallyConstantPotential(X, 0, 0, table))
    assert min(g.table.values()) == 0.0
    for b in bs:
        assert g.table[b] == table[b] + g.shift_constant

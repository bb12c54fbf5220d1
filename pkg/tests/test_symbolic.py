import numpy as np
import pytest

from relpress import example1 as ex1
from relpress.potential import LocallyConstantPotential, recode_potential
from relpress.pressure import log_S
from relpress.symbolic import (
    BlockDictionary,
    DegenerateSystemError,
    EnumerationCapError,
    EventuallyPeriodicPoint,
    FactorCode,
    blocks,
    count_blocks,
    count_preimage_blocks,
    higher_block_recode,
    identity_code,
    is_irreducible,
    make_sft,
    point_window,
    preimage_blocks,
    random_cycle,
    random_irreducible_sft,
    random_onto_code,
    shortest_connector,
)


def w(s):
    return tuple(s)


class TestMakeSft:
    def test_golden_mean_untouched(self, golden):
        assert golden.alphabet == ("1", "2")
        assert golden.removed == ()
        assert len(golden.edges) == 3

    def test_cascade_trim(self):
        X = make_sft([1, 2, 3], [(1, 1), (1, 2), (2, 3)])
        assert X.alphabet == (1,)
        assert X.edges == frozenset({(1, 1)})
        assert X.removed == (3, 2)

    def test_trim_is_idempotent(self):
        X = make_sft([1, 2, 3, 4], [(1, 2), (2, 1), (2, 3), (4, 1)])
        again = make_sft(X.alphabet, X.edges)
        assert again.alphabet == X.alphabet and again.edges == X.edges and again.removed == ()

    def test_empty_after_trim(self):
        with pytest.raises(DegenerateSystemError):
            make_sft([1, 2], [(1, 2)])

    def test_unknown_symbol_in_edge(self):
        with pytest.raises(ValueError):
            make_sft([1], [(1, 2)])

    def test_example1_all_essential(self, e1):
        X, _ = e1
        assert X.alphabet == ex1.ALPHABET and X.removed == ()


class TestIrreducible:
    def test_golden(self, golden):
        assert is_irreducible(golden)

    def test_two_loops(self):
        assert not is_irreducible(make_sft("ab", [("a", "a"), ("b", "b")]))

    def test_example1_transitive_closure(self, e1):
        X, _ = e1
        A = X.adjacency
        reach = np.linalg.matrix_power(np.eye(len(X), dtype=np.int64) + A, len(X)) > 0
        assert reach.all()
        assert is_irreducible(X)


class TestBlocks:
    def test_golden_two_blocks(self, golden):
        assert blocks(golden, 2) == [w("11"), w("12"), w("21")]

    def test_golden_fibonacci(self, golden):
        assert len(blocks(golden, 4)) == 8

    def test_full_shift(self, full2):
        assert len(blocks(full2, 3)) == 8
        assert blocks(full2, 3) == sorted(blocks(full2, 3))

    @pytest.mark.parametrize("n", range(1, 9))
    def test_counts_match_matrix_powers(self, e1, n):
        X, _ = e1
        A = X.adjacency
        expected = int(np.ones(len(X), dtype=np.int64) @ np.linalg.matrix_power(A, n - 1) @ np.ones(len(X), dtype=np.int64))
        assert count_blocks(X, n) == expected
        bs = blocks(X, n)
        assert len(bs) == expected
        assert all(X.is_word(b) for b in bs)

    def test_cap(self, full2):
        with pytest.raises(EnumerationCapError):
            blocks(full2, 12, cap=1000)


class TestPreimages:
    def test_example1_prefix(self, e1):
        _, code = e1
        pre = preimage_blocks(code, w("1222"))
        assert len(pre) == 3
        assert all(code(b) == w("1222") for b in pre)

    def test_example1_synchronised(self, e1):
        _, code = e1
        assert preimage_blocks(code, w("12221")) == [w("12221")]

    def test_identity(self, golden_id):
        v = w("11211")
        assert preimage_blocks(golden_id, v) == [v]

    def test_empty_result(self, e1):
        _, code = e1
        # 1 1 is not an image word of any block
        assert preimage_blocks(code, w("11")) == []
        assert count_preimage_blocks(code, w("11")) == 0

    def test_block_image_consistency(self, e1):
        _, code = e1
        for v in [w("2222"), w("12122"), w("2212221")]:
            pre = preimage_blocks(code, v)
            assert {code(b) for b in pre} == {v}
            assert len(pre) == count_preimage_blocks(code, v) == len(set(pre))

    def test_long_unique_preimage(self, e1):
        _, code = e1
        v = ex1.point(9).window(0, ex1.n_k(9))
        assert preimage_blocks(code, v) == [v]

    def test_wrong_alphabet(self, e1):
        _, code = e1
        with pytest.raises(ValueError):
            preimage_blocks(code, w("13"))


class TestRecoding:
    def test_k1_is_identity(self, e1):
        X, code = e1
        X1, code1, d = higher_block_recode(X, code, 1)
        assert len(X1) == len(X) and len(X1.edges) == len(X.edges)
        for v in [w("12221"), w("2222")]:
            assert count_preimage_blocks(code1, d.encode_image(v)) == count_preimage_blocks(code, v)

    def test_golden_two_blocks(self, golden):
        X2, _, _ = higher_block_recode(golden, identity_code(golden), 2)
        assert set(X2.alphabet) == {w("11"), w("12"), w("21")}
        # overlap rule, enumerated directly: ab -> bc whenever abc is a block
        expected = {(b[:2], b[1:]) for b in blocks(golden, 3)}
        assert X2.edges == frozenset(expected)
        assert len(X2.edges) == 5

    @pytest.mark.parametrize("anchor", [None, 0, 1])
    def test_preimage_bijection(self, e1, anchor):
        X, code = e1
        X2, code2, d = higher_block_recode(X, code, 2, anchor=anchor)
        for v in [w("122212"), w("21222"), w("1212")]:
            if anchor is None:
                pre2 = preimage_blocks(code2, d.encode_image(v))
                pre = preimage_blocks(code, v)
                assert sorted(d.decode(u) for u in pre2) == sorted(pre)
            else:
                # anchored: recoded blocks of length n are X-blocks of length n+1
                pre2 = preimage_blocks(code2, v)
                decoded = sorted(d.decode(u) for u in pre2)
                assert len(decoded) == len(set(decoded))
                assert all(code(b[anchor : anchor + len(v)]) == v for b in decoded)

    def test_example1_weighted_sums_survive(self, e1):
        X, code = e1
        f = LocallyConstantPotential.from_function(X, 0, 1, lambda b: 0.3 * (b[0] == "2") + 0.1 * (b[1] == "3"))
        X2, code2, d = higher_block_recode(X, code, 2)
        f2 = recode_potential(f, X2, d)
        for v in [w("1222"), w("122212"), w("2122221")]:
            # each recoded block drops exactly the last pair factor of its original
            a = log_S(code2, f2, d.encode_image(v), "phi")
            b = log_S(code, f, v, "phi")
            assert -1e-12 <= b - a <= f.log_bound + 1e-12

    def test_dictionary_round_trip(self):
        d = BlockDictionary(3)
        word = w("abcab")
        assert d.decode(d.encode(word)) == word
        with pytest.raises(ValueError):
            d.encode(w("ab"))


class TestPoints:
    def test_example1_windows(self):
        y = ex1.point(3)
        assert point_window(y, -3, -1) == w("222")
        assert point_window(y, 0, 4) == w("12221")

    def test_periodic(self):
        y = EventuallyPeriodicPoint.periodic("ab")
        assert point_window(y, 0, 3) == w("abab")
        assert point_window(y, -3, 0) == w("baba")
        assert y.is_periodic

    def test_window_matches_indexing(self):
        y = EventuallyPeriodicPoint(w("xyz"), w("ab"), w("pq"), anchor=2)
        for a in range(-9, 10):
            for b in range(a, 12):
                assert y.window(a, b) == tuple(y[i] for i in range(a, b + 1))

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            EventuallyPeriodicPoint.periodic("a").window(2, 1)

    def test_check(self, e1):
        _, code = e1
        ex1.point(2).check(code)
        with pytest.raises(ValueError):
            EventuallyPeriodicPoint(w("1"), (), w("1")).check(code)


class TestHelpers:
    def test_shortest_connector(self, e1):
        X, _ = e1
        c = shortest_connector(X, "1", "5")
        assert X.is_word(("1",) + c + ("5",))
        assert c == w("3")
        c = shortest_connector(X, "5", "2")
        assert X.is_word(("5",) + c + ("2",)) and len(c) == 3

    def test_connector_lexicographic(self):
        X = make_sft("abcd", [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("d", "a")])
        assert shortest_connector(X, "a", "d") == w("b")

    def test_random_helpers(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            X = random_irreducible_sft(rng)
            assert is_irreducible(X)
            code = random_onto_code(rng, X)
            assert isinstance(code, FactorCode)
            try:
                cyc = random_cycle(rng, X, 4)
            except RuntimeError:
                continue
            assert X.is_word(cyc + cyc[:1])

    def test_is_word(self, golden):
        assert golden.is_word(w("1121"))
        assert not golden.is_word(w("122"))
        assert not golden.is_word(w("13"))


def test_example1_reconstruction_oracle(e1):
    """Brute-force check of the graph: counts for 1 2^m and 1 2^m 1, odd m <= 11."""
    X, code = e1
    for m in range(1, 12, 2):
        target = ("1",) + ("2",) * m
        pre = [b for b in blocks(X, m + 1) if code(b) == target]
        assert len(pre) == 2 ** (m // 2) + 1
        closed = [b for b in blocks(X, m + 2) if code(b) == target + ("1",)]
        assert closed == [target + ("1",)]
    # the left-infinite 2-tail lifts through the 2 -> 2 loop
    assert ("2", "2") in X.edges

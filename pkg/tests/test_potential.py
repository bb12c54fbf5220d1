import itertools
import math

import numpy as np
import pytest

from relpress.potential import (
    MAX_RADIUS,
    LocallyConstantPotential,
    log_s,
    log_s_inf,
    log_s_phi,
    log_s_sup,
    log_windowed_weight,
    normalize_nonneg,
    pair_weight,
    to_pair_form,
    windowed_weight,
)
from relpress.pressure import log_S
from relpress.symbolic import blocks, random_irreducible_sft, random_onto_code

LN2 = math.log(2)


def random_potential(rng, X, lo, hi, scale=LN2):
    return LocallyConstantPotential.from_function(X, lo, hi, lambda w: float(rng.random()) * scale)


class TestConstruction:
    def test_table_must_cover_blocks(self, golden):
        with pytest.raises(ValueError):
            LocallyConstantPotential(golden, 0, 1, {("1", "1"): 0.0})
        with pytest.raises(ValueError):
            LocallyConstantPotential(golden, 0, 0, {("1",): 0.0, ("2",): 0.0, ("3",): 1.0})

    def test_window_must_contain_zero(self, golden):
        with pytest.raises(ValueError):
            LocallyConstantPotential(golden, 1, 2, {b: 0.0 for b in blocks(golden, 2)})

    def test_radius_cap(self, full2):
        m = MAX_RADIUS + 1
        with pytest.raises(ValueError):
            LocallyConstantPotential.from_function(full2, -m, m, lambda w: 0.0)

    def test_finite_values(self, golden):
        with pytest.raises(ValueError):
            LocallyConstantPotential(golden, 0, 0, {("1",): math.inf, ("2",): 0.0})

    def test_from_radius(self, golden):
        table = {b: float(i) for i, b in enumerate(blocks(golden, 3))}
        f = LocallyConstantPotential.from_radius(golden, 1, table)
        assert (f.lo, f.hi, f.width, f.radius) == (-1, 1, 3, 1)
        assert f(("1", "1", "2")) == table[("1", "1", "2")]


class TestNormalize:
    def test_zero_unchanged(self, golden):
        f = LocallyConstantPotential.constant(golden)
        g = normalize_nonneg(f)
        assert g.table == f.table and g.shift_constant == 0.0

    def test_shift_by_min(self, full2):
        f = LocallyConstantPotential(full2, 0, 0, {("0",): -1.0, ("1",): 2.0})
        g = normalize_nonneg(f)
        assert g.table == {("0",): 0.0, ("1",): 3.0}
        assert g.shift_constant == 1.0

    def test_random_min_is_zero(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            X = random_irreducible_sft(rng, 5)
            f = LocallyConstantPotential.from_function(X, -1, 1, lambda w: float(rng.normal()))
            g = normalize_nonneg(f)
            assert min(g.table.values()) == 0.0
            assert g.log_bound >= 0.0 and g.bound >= 1.0


class TestPairWeight:
    def test_zero(self, golden):
        F = pair_weight(LocallyConstantPotential.constant(golden))
        assert all(F(a, b) == 1.0 for a, b in golden.edges)

    def test_constant_ln2(self, golden):
        F = pair_weight(LocallyConstantPotential.constant(golden, LN2))
        assert all(F(a, b) == pytest.approx(2.0) for a, b in golden.edges)

    def test_example1_indicator(self, e1):
        X, _ = e1
        f = LocallyConstantPotential.from_function(X, 0, 0, lambda w: LN2 * (w[0] == "2"))
        F = pair_weight(f)
        for a, b in X.edges:
            assert F(a, b) == pytest.approx(2.0 if a == "2" else 1.0)

    def test_rejects_wide_window(self, golden):
        f = LocallyConstantPotential.from_function(golden, -1, 1, lambda w: 0.0)
        with pytest.raises(ValueError):
            pair_weight(f)


class TestSPhi:
    def test_zero(self, golden):
        F = pair_weight(LocallyConstantPotential.constant(golden))
        assert log_s_phi(F, ("1", "2", "1", "1")) == 0.0
        assert log_s_phi(F, ("2",)) == 0.0

    def test_power_of_two(self, golden):
        F = pair_weight(LocallyConstantPotential.constant(golden, LN2))
        assert math.exp(log_s_phi(F, ("1", "1", "2", "1", "1"))) == pytest.approx(16.0)

    def test_random_product(self):
        rng = np.random.default_rng(2)
        X = random_irreducible_sft(rng, 4)
        f = random_potential(rng, X, 0, 1)
        F = pair_weight(f)
        for B in blocks(X, 4):
            expected = F(B[0], B[1]) * F(B[1], B[2]) * F(B[2], B[3])
            assert math.exp(log_s_phi(F, B)) == pytest.approx(expected, rel=1e-12)

    def test_invalid_block(self, golden):
        F = pair_weight(LocallyConstantPotential.constant(golden))
        with pytest.raises(ValueError):
            log_s_phi(F, ("2", "2"))
        with pytest.raises(ValueError):
            log_s_phi(F, ())


class TestWindowedWeight:
    def test_zero(self, golden):
        f = LocallyConstantPotential.constant(golden)
        for B in blocks(golden, 4):
            for i in range(4):
                for mode in ("inf", "sup"):
                    assert windowed_weight(f, B, i, mode) == 1.0

    def test_pair_interior_is_exact(self):
        rng = np.random.default_rng(4)
        X = random_irreducible_sft(rng, 5)
        f = random_potential(rng, X, 0, 1)
        F = pair_weight(f)
        for B in blocks(X, 4)[:50]:
            for i in range(3):
                for mode in ("inf", "sup"):
                    assert windowed_weight(f, B, i, mode) == pytest.approx(F(B[i], B[i + 1]))

    def test_pair_last_position_inf(self):
        rng = np.random.default_rng(5)
        X = random_irreducible_sft(rng, 5)
        f = random_potential(rng, X, 0, 1)
        F = pair_weight(f)
        for B in blocks(X, 3)[:50]:
            expected = min(F(B[-1], a) for a in X.successors[B[-1]])
            assert windowed_weight(f, B, 2, "inf") == pytest.approx(expected)
            expected = max(F(B[-1], a) for a in X.successors[B[-1]])
            assert windowed_weight(f, B, 2, "sup") == pytest.approx(expected)

    def test_position_range(self, golden):
        f = LocallyConstantPotential.constant(golden)
        with pytest.raises(ValueError):
            windowed_weight(f, ("1", "2"), 2)
        with pytest.raises(ValueError):
            windowed_weight(f, ("2", "2"), 0)

    def test_brute_force_cylinder(self):
        """inf/sup over every allowed completion, enumerated independently."""
        rng = np.random.default_rng(6)
        X = random_irreducible_sft(rng, 4)
        f = random_potential(rng, X, -2, 1)
        m = 2
        for B in blocks(X, 3):
            ext = [e for e in blocks(X, len(B) + 2 * m) if e[m : m + len(B)] == B]
            for i in range(len(B)):
                vals = [f.table[e[m + i + f.lo : m + i + f.hi + 1]] for e in ext]
                assert log_windowed_weight(f, B, i, "inf") == min(vals)
                assert log_windowed_weight(f, B, i, "sup") == max(vals)


@pytest.fixture(scope="module")
def system():
    rng = np.random.default_rng(9)
    X = random_irreducible_sft(rng, 5, min_symbols=3)
    return X, random_potential(rng, X, 0, 1), random_potential(rng, X, -1, 2)


class TestBlockWeights:
    def test_zero(self, golden):
        f = LocallyConstantPotential.constant(golden)
        assert log_s_inf(f, ("1", "2", "1")) == 0.0 == log_s_sup(f, ("1", "2", "1"))

    def test_ordering_and_bound(self, system):
        X, f, g = system
        for h in (f, g):
            for n in (1, 3, 5):
                for B in blocks(X, n)[:40]:
                    lo, hi = log_s_inf(h, B), log_s_sup(h, B)
                    assert 0.0 <= lo <= hi <= n * h.log_bound + 1e-12

    def test_pair_mode_gaps(self, system):
        X, f, _ = system
        F = pair_weight(f)
        lnM = f.log_bound
        for n in (1, 2, 4, 6):
            for B in blocks(X, n)[:40]:
                phi, inf, sup = log_s_phi(F, B), log_s_inf(f, B), log_s_sup(f, B)
                assert phi <= sup + 1e-12 and sup <= phi + lnM + 1e-12
                assert inf <= phi + lnM + 1e-12
                assert abs(inf - phi) <= lnM + 1e-12

    def test_factor_invariants(self, system):
        X, _, g = system
        lnM = g.log_bound
        for n in (1, 2, 5):
            for B in blocks(X, n)[:30]:
                for i in range(n):
                    lo = log_windowed_weight(g, B, i, "inf")
                    hi = log_windowed_weight(g, B, i, "sup")
                    assert 0.0 <= lo <= hi <= lnM
                    if -g.lo <= i <= n - 1 - g.hi:
                        assert lo == hi

    def test_nesting_monotone(self, system):
        X, _, g = system
        for B in blocks(X, 4)[:30]:
            for a in X.successors[B[-1]]:
                Ba = B + (a,)
                for i in range(len(B)):
                    assert log_windowed_weight(g, Ba, i, "inf") >= log_windowed_weight(g, B, i, "inf")
                    assert log_windowed_weight(g, Ba, i, "sup") <= log_windowed_weight(g, B, i, "sup")

    def test_canonical_between_inf_and_sup(self, system):
        X, _, g = system
        for B in blocks(X, 4)[:30]:
            c = log_s(g, B, "canonical")
            assert log_s_inf(g, B) - 1e-12 <= c <= log_s_sup(g, B) + 1e-12

    def test_unknown_mode(self, system):
        X, f, _ = system
        with pytest.raises(ValueError):
            log_s(f, blocks(X, 2)[0], "median")


class TestPairForm:
    def test_narrow_is_kept(self, golden_id):
        f = LocallyConstantPotential.constant(golden_id.domain, 0.5)
        code2, f2 = to_pair_form(golden_id, f)
        assert code2 is golden_id and f2.width == 2

    @pytest.mark.parametrize("window", [(-1, 1), (-2, 0), (0, 2), (-1, 2)])
    def test_recoded_weights_track_original(self, window):
        """Same image words; ln S differs by at most the boundary factors."""
        rng = np.random.default_rng(sum(window) + 10)
        X = random_irreducible_sft(rng, 4, min_symbols=3)
        code = random_onto_code(rng, X)
        f = random_potential(rng, X, *window)
        code2, f2 = to_pair_form(code, f)
        assert f2.width <= 2
        assert code2.image_alphabet == code.image_alphabet or set(code2.image_alphabet) <= set(code.image_alphabet)
        k = f.width - 1
        slack = k * math.log(len(X)) + f.width * f.log_bound + 1e-9
        for n in (3, 5, 7):
            for x in itertools.islice(blocks(X, n), 0, 200, 17):
                v = code(x)
                a = log_S(code2, f2, v, "phi")
                b = log_S(code, f, v, "inf")
                assert abs(a - b) <= slack

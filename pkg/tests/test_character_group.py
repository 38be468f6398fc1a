import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from branched_rough.character_group import Character, is_character, product_of_forest_maps
from branched_rough.forest_algebra import EMPTY, enumerate_forests, parse

from oracles import brute_coproduct

F = parse


def forest_map_by_hand(a: Character) -> dict:
    """Forest values as products of tree values, without the library's tables."""
    out = {EMPTY: Fraction(1)}
    tv = a.tree_values
    for rho in enumerate_forests(a.d, a.p_floor):
        v = Fraction(1)
        for t in rho.trees:
            v *= tv[t]
        out[rho] = v
    return out


def brute_product(a: Character, b: Character) -> dict:
    fa, fb = forest_map_by_hand(a), forest_map_by_hand(b)
    out = {}
    for rho in enumerate_forests(a.d, a.p_floor):
        out[rho] = sum(m * fa[l] * fb[r] for (l, r), m in brute_coproduct(rho).items())
    return out


def rational_characters(d=2, n=3):
    fractions = st.fractions(min_value=-5, max_value=5, max_denominator=6)
    size = Character.identity(d, n).values.shape[0]
    return st.lists(fractions, min_size=size, max_size=size).map(lambda v: Character(d, n, np.array(v, dtype=object)))


class TestExamples:
    def test_identity_is_neutral(self):
        a = Character.random(2, 3, np.random.default_rng(0), exact=True)
        one = Character.identity(2, 3, exact=True)
        assert a * one == a and one * a == a

    def test_level_one_adds(self):
        a = Character.from_tree_values(2, 2, {"1": 3, "2": -1}, exact=True)
        b = Character.from_tree_values(2, 2, {"1": 2, "2": 5}, exact=True)
        ab = a * b
        assert ab.evaluate("1") == 5 and ab.evaluate("2") == 4

    def test_edge_component(self):
        a = Character.from_tree_values(2, 2, {"1": 1, "2": 2, "2(1)": 3}, exact=True)
        b = Character.from_tree_values(2, 2, {"1": 5, "2": 7, "2(1)": 11}, exact=True)
        # (ab, [.1]_2) = (a, [.1]_2) + (a, .1)(b, .2) + (b, [.1]_2)
        assert (a * b).evaluate("2(1)") == 3 + 1 * 7 + 11

    def test_inverse_examples(self):
        a = Character.from_tree_values(2, 2, {"1": Fraction(3), "2": Fraction(-2), "2(1)": Fraction(5)}, exact=True)
        inv = a.inverse()
        assert inv.evaluate("1") == -3
        assert inv.evaluate("2(1)") == -5 + 3 * -2
        assert Character.identity(2, 2, exact=True).inverse() == Character.identity(2, 2, exact=True)

    def test_norm_examples(self):
        assert Character.identity(1, 2).norm() == 0
        assert Character.from_tree_values(1, 2, {"1": 2}).norm() == pytest.approx(2)
        assert Character.from_tree_values(1, 2, {"1(1)": 4}).norm() == pytest.approx(2)

    def test_evaluate_truncation_and_labels(self):
        a = Character.from_tree_values(2, 2, {"1": 3, "2": 2}, exact=True)
        assert a.evaluate(EMPTY) == 1
        assert a.evaluate("1 2") == 6
        assert a.evaluate("1(1(1))") == 0
        with pytest.raises(ValueError, match="labels"):
            a.evaluate("3")

    def test_from_tree_values_rejects_forests(self):
        with pytest.raises(ValueError, match="not a tree"):
            Character.from_tree_values(1, 2, {"1 1": 1})

    def test_incompatible_product(self):
        with pytest.raises(ValueError, match="incompatible"):
            Character.identity(1, 2) * Character.identity(2, 2)

    def test_is_character_examples(self):
        assert is_character(Character.identity(2, 2).forest_map())
        fm = Character.from_tree_values(1, 2, {"1": 3}).forest_map()
        assert is_character(fm)
        fm[F("1 1")] += 1
        assert not is_character(fm, 1e-9)


class TestGroupLaws:
    @settings(max_examples=40, deadline=None)
    @given(rational_characters(), rational_characters())
    def test_product_matches_cut_enumeration(self, a, b):
        got = (a * b).forest_map()
        for rho, v in brute_product(a, b).items():
            assert got[rho] == v

    @settings(max_examples=40, deadline=None)
    @given(rational_characters(), rational_characters(), rational_characters())
    def test_associative(self, a, b, c):
        assert (a * b) * c == a * (b * c)

    @settings(max_examples=40, deadline=None)
    @given(rational_characters())
    def test_inverse_laws(self, a):
        one = Character.identity(2, 3, exact=True)
        assert a * a.inverse() == one and a.inverse() * a == one
        assert a.inverse().inverse() == a

    @settings(max_examples=40, deadline=None)
    @given(rational_characters(), rational_characters())
    def test_convolution_of_characters_is_a_character(self, a, b):
        conv = product_of_forest_maps(forest_map_by_hand(a), forest_map_by_hand(b), 3)
        conv[EMPTY] = Fraction(1)
        assert is_character(conv)

    @settings(max_examples=40, deadline=None)
    @given(rational_characters(d=1), st.floats(0.05, 20))
    def test_norm_is_homogeneous(self, a, lam):
        a = Character(1, 3, a.values.astype(float))
        assert a.dilate(lam).norm() == pytest.approx(lam * a.norm(), rel=1e-9, abs=1e-12)

    def test_float_inverse_is_accurate(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = Character.random(2, 3, rng)
            prod = a * a.inverse()
            assert np.max(np.abs(prod.values)) < 1e-12


class TestSerialization:
    def test_exact_roundtrip(self):
        a = Character.random(2, 3, np.random.default_rng(1), exact=True)
        assert Character.from_json(json.loads(json.dumps(a.to_json()))) == a

    def test_float_roundtrip(self):
        a = Character.random(2, 2, np.random.default_rng(1))
        b = Character.from_json(json.loads(json.dumps(a.to_json())))
        assert np.array_equal(a.values, b.values)

    def test_layout(self):
        obj = Character.from_tree_values(1, 2, {"1": 2, "1(1)": 3}).to_json()
        assert obj == {"d": 1, "p_floor": 2, "trees": [{"forest": "1", "value": 2.0}, {"forest": "1(1)", "value": 3.0}]}

import itertools
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from branched_rough.forest_algebra import (
    EMPTY,
    ForestLinComb,
    LabelledForest,
    as_forest,
    canonicalize,
    coproduct,
    encode,
    enumerate_forests,
    enumerate_trees,
    gl_product,
    graft_onto,
    graft_root,
    leaf,
    parse,
    reduced_coproduct,
    symmetry_factor,
)

from oracles import all_labelled_forests, automorphism_count, brute_coproduct, brute_gl_product

F = parse


def raw_trees(max_label=2, max_leaves=4):
    """Nested ``(label, [children])`` descriptions of small trees."""
    return st.recursive(
        st.integers(1, max_label).map(lambda i: (i, [])),
        lambda kids: st.tuples(st.integers(1, max_label), st.lists(kids, max_size=3)),
        max_leaves=max_leaves,
    )


class TestCanonicalForm:
    def test_children_order_is_irrelevant(self):
        a = canonicalize((1, [(2, []), (1, [(2, [])])]))
        b = canonicalize((1, [(1, [(2, [])]), (2, [])]))
        assert a == b and hash(a) == hash(b)

    def test_distinct_labellings_are_distinct(self):
        assert canonicalize((1, [(2, [])])) != canonicalize((2, [(1, [])]))

    def test_bare_integer_is_a_leaf(self):
        assert canonicalize(3) == leaf(3)

    def test_label_outside_range(self):
        with pytest.raises(ValueError, match="outside"):
            canonicalize((3, []), d=2)

    @given(raw_trees())
    def test_invariant_under_every_child_permutation(self, raw):
        def shuffled(r, k):
            kids = [shuffled(c, k) for c in r[1]]
            perms = list(itertools.permutations(kids))
            return (r[0], list(perms[k % len(perms)]))

        base = canonicalize(raw)
        for k in range(4):
            assert canonicalize(shuffled(raw, k)) == base

    @given(st.lists(raw_trees(), min_size=1, max_size=3))
    def test_encode_parse_roundtrip(self, raws):
        forest = LabelledForest(tuple(canonicalize(r) for r in raws))
        assert parse(encode(forest)) == forest

    @pytest.mark.parametrize("bad", ["1(", "1)", "0", "(1)", "1((2)", "x"])
    def test_parse_rejects_malformed(self, bad):
        with pytest.raises(ValueError):
            parse(bad)

    def test_forest_order_is_irrelevant(self):
        assert F("1(2) 2") == F("2 1(2)")

    def test_encoding_examples(self):
        assert encode(F("1(2 1)")) == "1(1 2)"
        assert encode(EMPTY) == ""
        assert F("1(1) 2").degree == 3


class TestEnumeration:
    @pytest.mark.parametrize("d,n", [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)])
    def test_forests_match_brute_force(self, d, n):
        assert set(enumerate_forests(d, n)) == all_labelled_forests(d, n)
        assert len(enumerate_forests(d, n)) == len(set(enumerate_forests(d, n)))

    @pytest.mark.parametrize("d,n", [(1, 3), (2, 3)])
    def test_trees_are_the_connected_forests(self, d, n):
        trees = {as_forest(t) for t in enumerate_trees(d, n)}
        assert trees == {f for f in all_labelled_forests(d, n) if f.is_tree}

    def test_known_counts(self):
        # unlabelled rooted trees 1, 1, 2; with two labels 2, 4, 14
        assert [len([t for t in enumerate_trees(1, 3) if t.degree == k]) for k in (1, 2, 3)] == [1, 1, 2]
        assert [len([t for t in enumerate_trees(2, 3) if t.degree == k]) for k in (1, 2, 3)] == [2, 4, 14]

    def test_degree_cap(self):
        with pytest.raises(ValueError, match="cap"):
            enumerate_trees(1, 4)


class TestSymmetryFactor:
    @pytest.mark.parametrize(
        "text,sigma",
        [("1", 1), ("1 1", 2), ("1 2", 1), ("1(2 2)", 2), ("1(1 2)", 1), ("1 1 1", 6), ("1(1) 1(1)", 2), ("1(1(1) 1(1))", 2)],
    )
    def test_examples(self, text, sigma):
        assert symmetry_factor(F(text)) == sigma

    def test_empty_forest(self):
        assert symmetry_factor(EMPTY) == 1

    @pytest.mark.parametrize("d,n", [(2, 3)])
    def test_equals_automorphism_count(self, d, n):
        for rho in enumerate_forests(d, n):
            assert symmetry_factor(rho) == automorphism_count(rho), encode(rho)

    def test_degree_four_automorphisms(self):
        for text in ("1(1 1 1)", "1(1(1) 1)", "1(1) 1(1)", "1 1 1 1", "1(2 2) 1"):
            assert symmetry_factor(F(text)) == automorphism_count(F(text))


class TestGrafting:
    def test_graft_root(self):
        assert graft_root(F("1 2"), 3) == F("3(1 2)").trees[0]
        assert graft_root(EMPTY, 2) == leaf(2)

    def test_graft_onto(self):
        assert graft_onto(F("1"), "2(3)") == F("2(1 3)").trees[0]
        assert graft_onto(EMPTY, "1(2)") == F("1(2)").trees[0]

    def test_graft_onto_needs_tree(self):
        with pytest.raises(ValueError, match="tree"):
            graft_onto(F("1"), "1 2")


def _as_counter(terms):
    out = Counter()
    for left, right, m in terms:
        out[(left, right)] += m
    return out


class TestCoproduct:
    def test_single_vertex(self):
        assert _as_counter(coproduct("1")) == Counter({(EMPTY, F("1")): 1, (F("1"), EMPTY): 1})

    def test_edge_prunes_leaf_to_the_left(self):
        expect = Counter({(EMPTY, F("1(2)")): 1, (F("2"), F("1")): 1, (F("1(2)"), EMPTY): 1})
        assert _as_counter(coproduct("1(2)")) == expect

    def test_cherry(self):
        got = _as_counter(coproduct("1(2 2)"))
        assert got[(F("2"), F("1(2)"))] == 2
        assert got[(F("2 2"), F("1"))] == 1
        assert sum(got.values()) == 5

    def test_empty_forest(self):
        assert coproduct(EMPTY) == [(EMPTY, EMPTY, 1)]

    @pytest.mark.parametrize("rho", enumerate_forests(2, 3), ids=encode)
    def test_matches_admissible_cut_enumeration(self, rho):
        assert _as_counter(coproduct(rho)) == brute_coproduct(rho)

    def test_degree_cap(self):
        with pytest.raises(ValueError, match="cap"):
            coproduct("1(2(1(2)))")

    def test_reduced_drops_unit_terms(self):
        red = _as_counter(reduced_coproduct("1(2 2)"))
        assert all(l != EMPTY and r != EMPTY for l, r in red)
        assert sum(red.values()) == 3

    @pytest.mark.parametrize("rho", enumerate_forests(2, 3), ids=encode)
    def test_degrees_add_up(self, rho):
        for left, right, _ in coproduct(rho):
            assert left.degree + right.degree == rho.degree


class TestGrossmanLarson:
    @pytest.mark.parametrize("a,b", [(x, y) for x in enumerate_forests(2, 2) for y in enumerate_forests(2, 2) if x.degree + y.degree <= 3], ids=str)
    def test_matches_grafting_enumeration(self, a, b):
        got = {rho: c for rho, c in gl_product(a, b)}
        assert got == dict(brute_gl_product(a, b))

    def test_total_degree_cap(self):
        with pytest.raises(ValueError, match="cap"):
            gl_product("1(2)", "1 1")

    def test_example(self):
        assert gl_product("1", "1") == ForestLinComb({F("1 1"): 1, F("1(1)"): 1})
        assert gl_product("1 1", "2")[F("2(1)") * F("1")] == 2

    def test_empty_is_unit(self):
        rho = F("1(2) 1")
        assert gl_product(EMPTY, rho) == ForestLinComb.of(rho)
        assert gl_product(rho, EMPTY) == ForestLinComb.of(rho)

    def test_associative(self):
        forests = [EMPTY] + [f for f in enumerate_forests(2, 2)]
        for a, b, c in itertools.product(forests, repeat=3):
            if a.degree + b.degree + c.degree > 3:
                continue
            lhs = ForestLinComb.of(a).star(ForestLinComb.of(b)).star(ForestLinComb.of(c))
            rhs = ForestLinComb.of(a).star(ForestLinComb.of(b).star(ForestLinComb.of(c)))
            assert lhs == rhs

    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from(enumerate_forests(2, 2)), st.sampled_from(enumerate_forests(2, 1)))
    def test_coefficients_are_positive_integers(self, a, b):
        for rho, c in gl_product(a, b):
            assert c > 0 and c == int(c)
            assert rho.degree == a.degree + b.degree

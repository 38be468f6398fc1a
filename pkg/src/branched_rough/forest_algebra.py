"""Labelled non-planar rooted trees and forests.

Trees are stored canonically (children sorted by a total order on trees), so
structural equality and hashing coincide with isomorphism of labelled rooted
trees.  The module also provides the Connes-Kreimer coproduct (admissible
cuts) and the Grossman-Larson product obtained from it by duality.

Text encoding: a single vertex with label ``i`` is ``"i"``, the tree ``[rho]_i``
is ``"i(<rho>)"`` and a forest is the space separated list of its sorted trees,
for example ``"1 2(1)"``.  The empty forest encodes as ``""``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from math import factorial

MAX_DEGREE = 3


@dataclass(frozen=True)
class LabelledTree:
    label: int
    children: tuple["LabelledTree", ...] = ()
    degree: int = field(init=False, compare=False, repr=False)
    depth: int = field(init=False, compare=False, repr=False)
    _key: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.label, int) or self.label < 1:
            raise ValueError(f"tree labels must be positive integers, got {self.label!r}")
        kids = tuple(sorted(self.children, key=lambda c: c._key))
        object.__setattr__(self, "children", kids)
        object.__setattr__(self, "degree", 1 + sum(c.degree for c in kids))
        object.__setattr__(self, "depth", 1 + max((c.depth for c in kids), default=0))
        object.__setattr__(self, "_key", (self.degree, self.label, tuple(c._key for c in kids)))

    def __lt__(self, other: "LabelledTree") -> bool:
        return self._key < other._key

    def __str__(self) -> str:
        return encode(self)

    def max_label(self) -> int:
        return max([self.label] + [c.max_label() for c in self.children])


@dataclass(frozen=True)
class LabelledForest:
    """Commutative monomial of trees; ``LabelledForest(())`` is the empty forest."""

    trees: tuple[LabelledTree, ...] = ()
    degree: int = field(init=False, compare=False, repr=False)
    depth: int = field(init=False, compare=False, repr=False)
    _key: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        trees = tuple(sorted(self.trees, key=lambda t: t._key))
        object.__setattr__(self, "trees", trees)
        object.__setattr__(self, "degree", sum(t.degree for t in trees))
        object.__setattr__(self, "depth", max((t.depth for t in trees), default=0))
        object.__setattr__(self, "_key", (self.degree, tuple(t._key for t in trees)))

    def __lt__(self, other: "LabelledForest") -> bool:
        return self._key < other._key

    def __mul__(self, other: "LabelledForest") -> "LabelledForest":
        return LabelledForest(self.trees + as_forest(other).trees)

    def __len__(self) -> int:
        return len(self.trees)

    def __str__(self) -> str:
        return encode(self)

    @property
    def is_tree(self) -> bool:
        return len(self.trees) == 1

    def max_label(self) -> int:
        return max((t.max_label() for t in self.trees), default=0)


EMPTY = LabelledForest(())


def as_forest(x) -> LabelledForest:
    if isinstance(x, LabelledForest):
        return x
    if isinstance(x, LabelledTree):
        return LabelledForest((x,))
    if isinstance(x, str):
        return parse(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as a forest")


def leaf(i: int) -> LabelledTree:
    return LabelledTree(i)


def canonicalize(raw, d: int | None = None) -> LabelledTree:
    """Build a canonical tree from a nested ``(label, [children...])`` description.

    A bare integer is accepted for a single vertex.  Labels must lie in
    ``1..d`` when ``d`` is given.
    """
    if isinstance(raw, LabelledTree):
        raw = _to_raw(raw)
    if isinstance(raw, int):
        label, kids = raw, ()
    else:
        label, kids = raw
    if d is not None and not 1 <= label <= d:
        raise ValueError(f"label {label} outside 1..{d}")
    return LabelledTree(label, tuple(canonicalize(k, d) for k in kids))


def _to_raw(t: LabelledTree):
    return (t.label, [_to_raw(c) for c in t.children])


def encode(x) -> str:
    if isinstance(x, LabelledTree):
        if not x.children:
            return str(x.label)
        return f"{x.label}(" + " ".join(encode(c) for c in x.children) + ")"
    return " ".join(encode(t) for t in as_forest(x).trees)


def parse(text: str) -> LabelledForest:
    """Inverse of :func:`encode` for forests."""
    pos = 0
    s = text.strip()

    def skip():
        nonlocal pos
        while pos < len(s) and s[pos] == " ":
            pos += 1

    def tree() -> LabelledTree:
        nonlocal pos
        start = pos
        while pos < len(s) and s[pos].isdigit():
            pos += 1
        if start == pos:
            raise ValueError(f"expected a label at position {pos} in {text!r}")
        label = int(s[start:pos])
        kids = []
        if pos < len(s) and s[pos] == "(":
            pos += 1
            skip()
            while pos < len(s) and s[pos] != ")":
                kids.append(tree())
                skip()
            if pos >= len(s):
                raise ValueError(f"unbalanced parentheses in {text!r}")
            pos += 1
        return LabelledTree(label, tuple(kids))

    trees = []
    skip()
    while pos < len(s):
        trees.append(tree())
        skip()
    return LabelledForest(tuple(trees))


def graft_root(rho, i: int) -> LabelledTree:
    """``[rho]_i``: attach the roots of all trees of ``rho`` to a new root labelled ``i``."""
    return LabelledTree(i, as_forest(rho).trees)


def graft_onto(rho, tau: LabelledTree) -> LabelledTree:
    """``rho > tau``: attach the roots of all trees of ``rho`` to the root of ``tau``."""
    if not isinstance(tau, LabelledTree):
        tf = as_forest(tau)
        if not tf.is_tree:
            raise ValueError(f"can only graft onto a tree, got {encode(tf)!r}")
        tau = tf.trees[0]
    return LabelledTree(tau.label, tau.children + as_forest(rho).trees)


def symmetry_factor(x) -> int:
    if isinstance(x, LabelledTree):
        return _sigma_forest(LabelledForest(x.children))
    return _sigma_forest(as_forest(x))


@lru_cache(maxsize=None)
def _sigma_forest(rho: LabelledForest) -> int:
    out = 1
    for tree, n in Counter(rho.trees).items():
        out *= factorial(n) * symmetry_factor(tree) ** n
    return out


# ---------------------------------------------------------------------------
# enumeration


def _check_cap(n: int):
    if n > MAX_DEGREE:
        raise ValueError(f"degree {n} exceeds the supported cap {MAX_DEGREE}")


@lru_cache(maxsize=None)
def _trees_of_degree(d: int, n: int) -> tuple[LabelledTree, ...]:
    if n == 1:
        return tuple(LabelledTree(i) for i in range(1, d + 1))
    out = []
    for i in range(1, d + 1):
        for kids in _forests_of_degree(d, n - 1):
            out.append(LabelledTree(i, kids.trees))
    return tuple(sorted(set(out)))


@lru_cache(maxsize=None)
def _forests_of_degree(d: int, n: int) -> tuple[LabelledForest, ...]:
    out = set()
    for parts in _partitions(n):
        # group equal part sizes so that multisets are generated once
        sizes = Counter(parts)
        combos = [[]]
        for k, m in sorted(sizes.items()):
            pool = _trees_of_degree(d, k)
            combos = [c + list(extra) for c in combos for extra in combinations_with_replacement(pool, m)]
        for c in combos:
            out.add(LabelledForest(tuple(c)))
    return tuple(sorted(out))


def _partitions(n: int, largest: int | None = None):
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k):
            yield (k,) + rest


def enumerate_trees(d: int, n: int) -> list[LabelledTree]:
    """All trees labelled by ``1..d`` with degree ``1..n``, in canonical order."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    _check_cap(n)
    return [t for k in range(1, n + 1) for t in _trees_of_degree(d, k)]


def enumerate_forests(d: int, n: int) -> list[LabelledForest]:
    """All non-empty forests labelled by ``1..d`` with degree ``1..n``, canonical order."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    _check_cap(n)
    return [f for k in range(1, n + 1) for f in _forests_of_degree(d, k)]


# ---------------------------------------------------------------------------
# coproduct


@lru_cache(maxsize=None)
def _tree_coproduct(tau: LabelledTree) -> Counter:
    # Delta [rho]_j = [rho]_j (x) 1 + sum_{Delta rho} rho_(1) (x) [rho_(2)]_j
    out = Counter({(LabelledForest((tau,)), EMPTY): 1})
    for (left, right), m in _forest_coproduct(LabelledForest(tau.children)).items():
        out[(left, LabelledForest((graft_root(right, tau.label),)))] += m
    return out


@lru_cache(maxsize=None)
def _forest_coproduct(rho: LabelledForest) -> Counter:
    out = Counter({(EMPTY, EMPTY): 1})
    for tree in rho.trees:
        nxt = Counter()
        for (l1, r1), m1 in out.items():
            for (l2, r2), m2 in _tree_coproduct(tree).items():
                nxt[(l1 * l2, r1 * r2)] += m1 * m2
        out = nxt
    return out


def coproduct(rho) -> list[tuple[LabelledForest, LabelledForest, int]]:
    """Full coproduct by admissible cuts, as ``(pruned, trunk, multiplicity)`` triples.

    The left factor collects the pruned branches and the right factor the part
    containing the roots, so that ``Delta([1]_2) = 2(1) (x) e + e (x) 2(1) + 1 (x) 2``.
    """
    rho = as_forest(rho)
    _check_cap(rho.degree)
    terms = _forest_coproduct(rho)
    return sorted(((l, r, m) for (l, r), m in terms.items()), key=lambda t: (t[0]._key, t[1]._key))


def reduced_coproduct(rho) -> list[tuple[LabelledForest, LabelledForest, int]]:
    return [(l, r, m) for l, r, m in coproduct(rho) if l != EMPTY and r != EMPTY]


# ---------------------------------------------------------------------------
# Grossman-Larson product


class ForestLinComb:
    """Finite rational linear combination of forests (zero coefficients dropped)."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[LabelledForest, Fraction] = {}
        for k, v in (terms or {}).items():
            if v:
                self.terms[as_forest(k)] = Fraction(v)

    @classmethod
    def of(cls, rho) -> "ForestLinComb":
        return cls({as_forest(rho): 1})

    def __add__(self, other: "ForestLinComb") -> "ForestLinComb":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return ForestLinComb(out)

    def __sub__(self, other: "ForestLinComb") -> "ForestLinComb":
        return self + other.scale(-1)

    def scale(self, c) -> "ForestLinComb":
        return ForestLinComb({k: c * v for k, v in self.terms.items()})

    def __getitem__(self, rho) -> Fraction:
        return self.terms.get(as_forest(rho), Fraction(0))

    def __eq__(self, other) -> bool:
        return isinstance(other, ForestLinComb) and self.terms == other.terms

    def __iter__(self):
        return iter(sorted(self.terms.items(), key=lambda kv: kv[0]._key))

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        body = " + ".join(f"{v}*[{encode(k) or 'e'}]" for k, v in self)
        return f"ForestLinComb({body or '0'})"

    def star(self, other: "ForestLinComb") -> "ForestLinComb":
        out = ForestLinComb()
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                out = out + gl_product(k1, k2).scale(v1 * v2)
        return out


@lru_cache(maxsize=None)
def _gl_product(rho1: LabelledForest, rho2: LabelledForest) -> ForestLinComb:
    n = rho1.degree + rho2.degree
    labels = max(rho1.max_label(), rho2.max_label(), 1)
    targets = [EMPTY] if n == 0 else list(_forests_of_degree(labels, n))
    s12 = symmetry_factor(rho1) * symmetry_factor(rho2)
    out = {}
    # Matching the coefficient of the character monomial (a, rho1)(b, rho2) on
    # both sides of the duality identity decouples the system: one unknown per
    # target forest tau.
    for tau in targets:
        mult = _forest_coproduct(tau).get((rho1, rho2), 0)
        if not mult:
            continue
        coeff = Fraction(mult * s12, symmetry_factor(tau))
        if coeff.denominator != 1:
            raise ArithmeticError(
                f"non-integral Grossman-Larson coefficient {coeff} for {encode(rho1)} * {encode(rho2)} -> {encode(tau)}"
            )
        out[tau] = coeff
    return ForestLinComb(out)


def gl_product(rho1, rho2) -> ForestLinComb:
    """Grossman-Larson product ``rho1 * rho2`` dual to :func:`coproduct`.

    Coefficients satisfy, for all characters ``a, b`` and forests ``tau``,
    ``(ab, tau) = sum sigma(tau) / (sigma(rho1) sigma(rho2)) (rho1*rho2, tau) (a, rho1)(b, rho2)``.
    The left factor is grafted onto the right one.
    """
    rho1, rho2 = as_forest(rho1), as_forest(rho2)
    _check_cap(rho1.degree + rho2.degree)
    return _gl_product(rho1, rho2)

"""Truncated character group of the labelled Connes-Kreimer Hopf algebra.

A character is stored by its values on trees of degree ``<= n``; values on
forests are products of tree values.  The index tables in :class:`GradedBasis`
let every operation run on stacked arrays of shape ``(..., n_trees)`` so that
a whole sampled path is multiplied or inverted in one call.  Arrays with
``dtype=object`` holding :class:`fractions.Fraction` give exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .forest_algebra import (
    EMPTY,
    LabelledForest,
    LabelledTree,
    as_forest,
    coproduct,
    encode,
    enumerate_forests,
    enumerate_trees,
    graft_onto,
    parse,
    symmetry_factor,
)


class GradedBasis:
    """Trees and forests over labels ``1..d`` with degree ``<= n`` plus product tables.

    Forest columns use an "extended" layout where column 0 is the empty forest
    and column ``1 + k`` is ``forests[k]``.
    """

    def __init__(self, d: int, n: int):
        self.d = d
        self.n = n
        self.trees: list[LabelledTree] = enumerate_trees(d, n)
        self.forests: list[LabelledForest] = enumerate_forests(d, n)
        self.tree_index = {t: k for k, t in enumerate(self.trees)}
        self.forest_index = {f: k for k, f in enumerate(self.forests)}
        self.n_trees = len(self.trees)
        self.n_forests = len(self.forests)
        self.tree_degree = np.array([t.degree for t in self.trees])
        self.forest_degree = np.array([f.degree for f in self.forests])
        self.tree_sigma = np.array([symmetry_factor(t) for t in self.trees])
        self.forest_sigma = np.array([symmetry_factor(f) for f in self.forests])
        # forest k is the product of columns forest_trees[k] of [tree values | 1]
        pad = self.n_trees
        self.forest_trees = np.full((self.n_forests, n), pad, dtype=int)
        for k, f in enumerate(self.forests):
            for j, t in enumerate(f.trees):
                self.forest_trees[k, j] = self.tree_index[t]
        self.tree_as_forest = np.array([self.forest_index[as_forest(t)] for t in self.trees])
        self.is_tree = np.zeros(self.n_forests, dtype=bool)
        self.is_tree[self.tree_as_forest] = True
        self.forest_to_tree = np.full(self.n_forests, -1)
        self.forest_to_tree[self.tree_as_forest] = np.arange(self.n_trees)

    def ext(self, f: LabelledForest) -> int:
        return 0 if f == EMPTY else 1 + self.forest_index[f]

    # -- tables ---------------------------------------------------------------

    @cached_property
    def tree_coproduct_table(self):
        """Arrays ``(target tree, left ext-forest, right ext-forest, multiplicity)``."""
        rows = []
        for k, t in enumerate(self.trees):
            for left, right, m in coproduct(t):
                rows.append((k, self.ext(left), self.ext(right), m))
        return tuple(np.array(col) for col in zip(*rows))

    @cached_property
    def forest_coproduct_table(self):
        """Arrays ``(target forest, left ext-forest, right ext-forest, multiplicity)``."""
        rows = []
        for k, f in enumerate(self.forests):
            for left, right, m in coproduct(f):
                rows.append((k, self.ext(left), self.ext(right), m))
        return tuple(np.array(col) for col in zip(*rows))

    @cached_property
    def concat_table(self):
        """Index triples ``(i, j, k)`` with ``forests[i] * forests[j] == forests[k]``."""
        rows = []
        for i, a in enumerate(self.forests):
            for j, b in enumerate(self.forests):
                if a.degree + b.degree <= self.n:
                    rows.append((i, j, self.forest_index[a * b]))
        if not rows:
            return tuple(np.zeros(0, dtype=int) for _ in range(3))
        return tuple(np.array(col) for col in zip(*rows))

    @cached_property
    def graft_table(self):
        """Index triples ``(i, j, k)`` with ``forests[i] > forests[j] == forests[k]`` (j a tree)."""
        rows = []
        for i, a in enumerate(self.forests):
            for t in self.trees:
                if a.degree + t.degree <= self.n:
                    rows.append((i, self.forest_index[as_forest(t)], self.forest_index[as_forest(graft_onto(a, t))]))
        if not rows:
            return tuple(np.zeros(0, dtype=int) for _ in range(3))
        return tuple(np.array(col) for col in zip(*rows))

    @cached_property
    def _scatter_trees(self):
        target = self.tree_coproduct_table[0]
        s = np.zeros((len(target), self.n_trees))
        s[np.arange(len(target)), target] = 1.0
        return s

    # -- batched operations ---------------------------------------------------

    def forest_values(self, vals: np.ndarray) -> np.ndarray:
        """Values on ``forests`` from tree values; shape ``(..., n_forests)``."""
        ones = np.ones(vals.shape[:-1] + (1,), dtype=vals.dtype)
        if vals.dtype == object:
            ones = ones.astype(object)
            ones[...] = 1
        padded = np.concatenate([vals, ones], axis=-1)
        return np.prod(padded[..., self.forest_trees], axis=-1)

    def ext_values(self, vals: np.ndarray) -> np.ndarray:
        fv = self.forest_values(vals)
        ones = np.ones(vals.shape[:-1] + (1,), dtype=fv.dtype)
        if fv.dtype == object:
            ones = ones.astype(object)
            ones[...] = 1
        return np.concatenate([ones, fv], axis=-1)

    def product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Group product on tree values: ``(ab, tau) = sum (a, tau_(1)) (b, tau_(2))``."""
        target, left, right, mult = self.tree_coproduct_table
        ea, eb = self.ext_values(a), self.ext_values(b)
        terms = ea[..., left] * eb[..., right] * mult
        if terms.dtype == object:
            out = np.zeros(terms.shape[:-1] + (self.n_trees,), dtype=object)
            for col, t in enumerate(target):
                out[..., t] = out[..., t] + terms[..., col]
            return out
        return terms @ self._scatter_trees

    def inverse(self, a: np.ndarray) -> np.ndarray:
        """Degree-by-degree solution of ``(a a^-1, tau) = 0``."""
        target, left, right, mult = self.tree_coproduct_table
        ea = self.ext_values(a)
        inv = np.zeros_like(a)
        # (a^-1, tau) = -sum_{left != e} (a, left) (a^-1, right); right is a tree or e
        for k in np.argsort(self.tree_degree, kind="stable"):
            acc = 0
            for col in np.nonzero(target == k)[0]:
                l, r, m = left[col], right[col], mult[col]
                if l == 0:
                    continue
                rv = 1 if r == 0 else inv[..., self.forest_to_tree[r - 1]]
                acc = acc + m * ea[..., l] * rv
            inv[..., k] = -acc
        return inv

    def identity(self, shape=(), exact: bool = False) -> np.ndarray:
        if exact:
            out = np.empty(tuple(shape) + (self.n_trees,), dtype=object)
            out[...] = Fraction(0)
            return out
        return np.zeros(tuple(shape) + (self.n_trees,))

    def norm(self, vals: np.ndarray) -> np.ndarray:
        fv = np.abs(self.forest_values(vals).astype(float))
        return np.max(fv ** (1.0 / self.forest_degree), axis=-1)

    def dilate(self, vals: np.ndarray, lam: float) -> np.ndarray:
        return vals * lam ** self.tree_degree


@lru_cache(maxsize=None)
def basis(d: int, n: int) -> GradedBasis:
    return GradedBasis(d, n)


@dataclass(frozen=True, eq=False)
class Character:
    """Element of the step-``p_floor`` truncated character group over labels ``1..d``."""

    d: int
    p_floor: int
    values: np.ndarray

    @property
    def basis(self) -> GradedBasis:
        return basis(self.d, self.p_floor)

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    @classmethod
    def identity(cls, d: int, p_floor: int, exact: bool = False) -> "Character":
        return cls(d, p_floor, basis(d, p_floor).identity(exact=exact))

    @classmethod
    def from_tree_values(cls, d: int, p_floor: int, tree_values: dict, exact: bool = False) -> "Character":
        b = basis(d, p_floor)
        vals = b.identity(exact=exact)
        for key, v in tree_values.items():
            f = as_forest(key)
            if not f.is_tree:
                raise ValueError(f"{encode(f)!r} is not a tree; characters are set by tree values")
            if f.degree > p_floor:
                continue
            vals[b.tree_index[f.trees[0]]] = Fraction(v) if exact else float(v)
        return cls(d, p_floor, vals)

    @classmethod
    def random(cls, d: int, p_floor: int, rng: np.random.Generator, exact: bool = False, scale: float = 1.0):
        b = basis(d, p_floor)
        if exact:
            vals = np.array([Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6))) for _ in range(b.n_trees)], dtype=object)
        else:
            vals = rng.normal(scale=scale, size=b.n_trees)
        return cls(d, p_floor, vals)

    @property
    def tree_values(self) -> dict:
        return dict(zip(self.basis.trees, self.values))

    def evaluate(self, rho) -> float:
        return evaluate(self, rho)

    def __mul__(self, other: "Character") -> "Character":
        return group_product(self, other)

    def inverse(self) -> "Character":
        return inverse(self)

    def norm(self) -> float:
        return norm(self)

    def dilate(self, lam: float) -> "Character":
        return Character(self.d, self.p_floor, self.basis.dilate(self.values, lam))

    def level1(self) -> np.ndarray:
        return np.array([self.values[k] for k in range(self.d)])

    def forest_map(self) -> dict:
        """Values on every forest of degree ``0..p_floor`` (the empty forest maps to 1)."""
        fv = self.basis.forest_values(self.values[None, :])[0]
        out = {EMPTY: Fraction(1) if self.exact else 1.0}
        out.update(zip(self.basis.forests, fv))
        return out

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "p_floor": self.p_floor,
            "trees": [{"forest": encode(t), "value": _num_out(v)} for t, v in zip(self.basis.trees, self.values)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Character":
        exact = any(isinstance(e["value"], str) for e in obj["trees"])
        tv = {parse(e["forest"]): (Fraction(e["value"]) if exact else float(e["value"])) for e in obj["trees"]}
        return cls.from_tree_values(obj["d"], obj["p_floor"], tv, exact=exact)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Character):
            return NotImplemented
        return self.d == other.d and self.p_floor == other.p_floor and bool(np.all(self.values == other.values))

    def __repr__(self) -> str:
        body = ", ".join(f"{encode(t)}: {v}" for t, v in self.tree_values.items() if v != 0)
        return f"Character(d={self.d}, p_floor={self.p_floor}, {{{body}}})"


def _num_out(v):
    if isinstance(v, Fraction):
        return str(v)
    return float(v)


def evaluate(a: Character, rho) -> float:
    """``(a, rho)`` with ``(a, e) = 1`` and zero above the truncation degree."""
    rho = as_forest(rho)
    one = Fraction(1) if a.exact else 1.0
    if rho.degree > a.p_floor:
        return 0 * one
    if rho.max_label() > a.d:
        raise ValueError(f"forest {encode(rho)!r} uses labels beyond d={a.d}")
    out = one
    for t in rho.trees:
        out = out * a.values[a.basis.tree_index[t]]
    return out


def _check_compatible(a: Character, b: Character):
    if (a.d, a.p_floor) != (b.d, b.p_floor):
        raise ValueError(f"incompatible characters: (d, p_floor) = {(a.d, a.p_floor)} vs {(b.d, b.p_floor)}")


def group_product(a: Character, b: Character) -> Character:
    _check_compatible(a, b)
    vals = a.basis.product(a.values[None, :], b.values[None, :])[0]
    return Character(a.d, a.p_floor, vals)


def inverse(a: Character) -> Character:
    return Character(a.d, a.p_floor, a.basis.inverse(a.values[None, :])[0])


def norm(a: Character) -> float:
    return float(a.basis.norm(a.values[None, :])[0])


def product_of_forest_maps(a: dict, b: dict, n: int) -> dict:
    """Convolution ``(ab, rho) = sum_{Delta rho} (a, rho_(1)) (b, rho_(2))`` on forest-indexed maps.

    Unlike :func:`group_product` this never assumes the inputs are characters,
    so it serves as an independent route for checking the character law.
    """
    out = {}
    for rho in {k for k in a} | {k for k in b}:
        if rho.degree > n:
            continue
        total = 0
        for left, right, m in coproduct(rho):
            total = total + m * a.get(left, 0) * b.get(right, 0)
        out[rho] = total
    return out


def is_character(a: dict, tol: float = 0.0) -> bool:
    """Check ``(a, rho1 rho2) = (a, rho1)(a, rho2)`` on a forest-indexed map.

    Missing forests count as zero; forests above the largest degree present
    are treated as truncated.
    """
    a = {as_forest(k): v for k, v in a.items()}
    if abs(a.get(EMPTY, 1) - 1) > tol:
        return False
    n = max((k.degree for k in a), default=0)
    keys = [k for k in a if k != EMPTY]
    for rho in keys:
        if len(rho.trees) < 2:
            continue
        for cut in range(1, len(rho.trees)):
            r1 = LabelledForest(rho.trees[:cut])
            r2 = LabelledForest(rho.trees[cut:])
            if abs(a[rho] - a.get(r1, 0) * a.get(r2, 0)) > tol:
                return False
    # every product of present factors must itself be present when within degree
    for r1 in keys:
        for r2 in keys:
            if r1.degree + r2.degree <= n and (r1 * r2) not in a:
                if abs(a[r1] * a[r2]) > tol:
                    return False
    return True

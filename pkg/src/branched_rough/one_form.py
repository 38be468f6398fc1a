"""Polynomial one-forms ``f = (f_1, ..., f_d)`` with ``f_i : R^d -> R^e``.

Polynomials are kept symbolically (exponent tuple -> coefficient) so that
derivatives are exact.  The tree-indexed family ``f_tau`` and the lifted
one-form ``beta(x)(a) = sum_tau f_tau(x) (a, tau) / sigma(tau)`` are built on top.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor
from numbers import Number

import numpy as np

from .character_group import Character, GradedBasis
from .forest_algebra import LabelledTree


def _coerce(c):
    if isinstance(c, (Fraction, int)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, float) and c.is_integer():
        return Fraction(int(c))
    if isinstance(c, Number):
        return float(c)
    raise TypeError(f"unsupported coefficient {c!r}")


class Polynomial:
    """Sparse multivariate polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict | None = None):
        self.nvars = nvars
        clean = {}
        for mono, c in (terms or {}).items():
            mono = tuple(int(m) for m in mono)
            if len(mono) != nvars or any(m < 0 for m in mono):
                raise ValueError(f"bad monomial {mono} for {nvars} variables")
            c = _coerce(c)
            if c != 0:
                clean[mono] = clean.get(mono, 0) + c
        self.terms = {m: c for m, c in clean.items() if c != 0}

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, c) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Polynomial":
        """The coordinate ``x_i`` (1-based)."""
        mono = [0] * nvars
        mono[i - 1] = 1
        return cls(nvars, {tuple(mono): 1})

    @property
    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def diff(self, i: int) -> "Polynomial":
        """Partial derivative in ``x_i`` (1-based)."""
        k = i - 1
        out = {}
        for mono, c in self.terms.items():
            if mono[k]:
                m = list(mono)
                m[k] -= 1
                out[tuple(m)] = c * mono[k]
        return Polynomial(self.nvars, out)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return Polynomial(self.nvars, terms)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            terms = {}
            for (m1, c1), (m2, c2) in itertools.product(self.terms.items(), other.terms.items()):
                m = tuple(a + b for a, b in zip(m1, m2))
                terms[m] = terms.get(m, 0) + c1 * c2
            return Polynomial(self.nvars, terms)
        return Polynomial(self.nvars, {m: c * _coerce(other) for m, c in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.nvars == other.nvars and self.terms == other.terms

    def __call__(self, x):
        """Evaluate at a point or a batch of points (last axis has length ``nvars``).

        Exact when ``x`` holds Fractions (object arrays or sequences).
        """
        x = np.asarray(x) if not isinstance(x, np.ndarray) else x
        if x.dtype == object or (x.ndim == 1 and any(isinstance(v, Fraction) for v in x.tolist())):
            x = np.asarray(x, dtype=object)
            if x.ndim == 1:
                total = Fraction(0)
                for mono, c in self.terms.items():
                    term = c
                    for v, e in zip(x, mono):
                        term *= v**e
                    total += term
                return total
            acc = np.zeros(x.shape[:-1], dtype=object)
            acc[...] = Fraction(0)
            for mono, c in self.terms.items():
                term = np.full(x.shape[:-1], c, dtype=object)
                for k, e in enumerate(mono):
                    if e:
                        term = term * x[..., k] ** e
                acc = acc + term
            return acc
        x = np.asarray(x, dtype=float)
        acc = np.zeros(x.shape[:-1])
        for mono, c in self.terms.items():
            term = np.full(x.shape[:-1], float(c))
            for k, e in enumerate(mono):
                if e:
                    term = term * x[..., k] ** e
            acc = acc + term
        return acc if acc.shape else float(acc)

    def to_json(self) -> list:
        return [{"monomial": list(m), "coeff": _num_json(c)} for m, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, nvars: int, terms: list) -> "Polynomial":
        out = {}
        for t in terms:
            m = tuple(t["monomial"])
            out[m] = out.get(m, 0) + _coerce(t["coeff"])
        return cls(nvars, out)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items()):
            mono = "*".join(f"x{k+1}^{e}" if e > 1 else f"x{k+1}" for k, e in enumerate(m) if e)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def _num_json(c):
    if isinstance(c, Fraction):
        return int(c) if c.denominator == 1 else str(c)
    return c


VectorPoly = tuple  # tuple of e Polynomials


@dataclass(frozen=True)
class PolynomialOneForm:
    """``components[i][k]`` is the ``k``-th output coordinate of ``f_{i+1}``."""

    d: int
    e: int
    gamma: float
    components: tuple
    _tables: dict = field(default_factory=dict, init=False, compare=False, repr=False)

    def __post_init__(self):
        comps = tuple(tuple(row) for row in self.components)
        if len(comps) != self.d or any(len(row) != self.e for row in comps):
            raise ValueError(f"components must be a {self.d} x {self.e} array of polynomials")
        if any(p.nvars != self.d for row in comps for p in row):
            raise ValueError(f"polynomials must be in {self.d} variables")
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls, d: int, e: int, gamma: float) -> "PolynomialOneForm":
        return cls(d, e, gamma, [[Polynomial.zero(d) for _ in range(e)] for _ in range(d)])

    @classmethod
    def from_json(cls, obj: dict) -> "PolynomialOneForm":
        d, e = int(obj["d"]), int(obj["e"])
        comps = obj["components"]
        if len(comps) != d or any(len(row) != e for row in comps):
            raise ValueError(f"'components' must be a {d} x {e} nested list of term lists")
        return cls(d, e, float(obj["gamma"]), [[Polynomial.from_json(d, terms) for terms in row] for row in comps])

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "e": self.e,
            "gamma": self.gamma,
            "components": [[p.to_json() for p in row] for row in self.components],
        }

    @classmethod
    def load(cls, path) -> "PolynomialOneForm":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def is_zero(self) -> bool:
        return all(p.is_zero() for row in self.components for p in row)

    def derivative(self, i: int, multi_index=()) -> VectorPoly:
        """``D^l_{i_1..i_l} f_i`` as a tuple of ``e`` polynomials."""
        if not 1 <= i <= self.d:
            raise ValueError(f"component {i} outside 1..{self.d}")
        out = list(self.components[i - 1])
        for j in multi_index:
            if not 1 <= j <= self.d:
                raise ValueError(f"derivative direction {j} outside 1..{self.d}")
            out = [p.diff(j) for p in out]
        return tuple(out)

    def f_tau(self, tau: LabelledTree) -> VectorPoly:
        """``f_{.i} = f_i``, ``f_{[.i1 ... .il]_i} = D^l f_i``, zero for depth above 2."""
        if tau.depth > 2:
            return tuple(Polynomial.zero(self.d) for _ in range(self.e))
        return self.derivative(tau.label, [c.label for c in tau.children])

    def f_tau_table(self, b: GradedBasis) -> list:
        return [self.f_tau(t) for t in b.trees]

    def f_tau_values(self, b: GradedBasis, x) -> np.ndarray:
        """``f_tau(x)`` for every tree of ``b``; shape ``x.shape[:-1] + (n_trees, e)``."""
        x = np.asarray(x, dtype=float)
        table = _f_tau_cache(self, b)
        out = np.zeros(x.shape[:-1] + (b.n_trees, self.e))
        for k, vec in enumerate(table):
            for c, poly in enumerate(vec):
                if not poly.is_zero():
                    out[..., k, c] = poly(x)
        return out

    def beta_coefficients(self, b: GradedBasis, x) -> np.ndarray:
        """Tree coefficients ``f_tau(x) / sigma(tau)`` of the lifted one-form at ``x``."""
        return self.f_tau_values(b, x) / b.tree_sigma[:, None]

    def lip_norm_estimate(self, gamma_minus_1: float, box, n_grid: int = 9) -> float:
        return lip_norm_estimate(self, gamma_minus_1, box, n_grid)


def _f_tau_cache(f: PolynomialOneForm, b: GradedBasis) -> list:
    key = (b.d, b.n)
    if key not in f._tables:
        f._tables[key] = f.f_tau_table(b)
    return f._tables[key]


def beta_eval(f: PolynomialOneForm, x, a: Character) -> np.ndarray:
    """``sum_tau f_tau(x) (a, tau) / sigma(tau)``; only tree components of ``a`` enter."""
    if a.d != f.d:
        raise ValueError(f"character over {a.d} labels, one-form over {f.d}")
    b = a.basis
    if a.exact:
        x = np.asarray([Fraction(v) for v in x], dtype=object)
        out = [Fraction(0)] * f.e
        for k, t in enumerate(b.trees):
            vec = f.f_tau(t)
            for c in range(f.e):
                if not vec[c].is_zero():
                    out[c] += vec[c](x) * a.values[k] / int(b.tree_sigma[k])
        return np.array(out, dtype=object)
    return np.einsum("te,t->e", f.beta_coefficients(b, x), a.values.astype(float))


def _strict_floor(g: float) -> int:
    """Largest integer strictly below ``g``."""
    return int(ceil(g)) - 1 if g > 0 else int(floor(g))


def lip_norm_estimate(f: PolynomialOneForm, gamma_minus_1: float, box, n_grid: int = 9) -> float:
    """Grid estimate of the Lip(gamma-1) norm of ``f`` on a box.

    Takes the max over sampled ``|D^k f|`` (entrywise, ``k <= floor(gamma-1)``
    with floor strictly below) and over Holder quotients of the top derivative
    between grid points.  For reporting only.
    """
    box = np.asarray(box, dtype=float)
    if box.shape != (f.d, 2) or np.any(box[:, 1] < box[:, 0]):
        raise ValueError(f"box must be {f.d} intervals [lo, hi]")
    top = _strict_floor(gamma_minus_1)
    alpha = gamma_minus_1 - top
    axes = [np.linspace(lo, hi, n_grid) if hi > lo else np.array([lo]) for lo, hi in box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, f.d)
    best = 0.0
    top_vals = []
    for k in range(top + 1):
        for i in range(1, f.d + 1):
            for mi in itertools.product(range(1, f.d + 1), repeat=k):
                vals = np.stack([np.broadcast_to(p(pts), (len(pts),)) for p in f.derivative(i, mi)], axis=-1)
                best = max(best, float(np.max(np.abs(vals))))
                if k == top:
                    top_vals.append(vals)
    if len(pts) > 1 and top_vals:
        dist = np.max(np.abs(pts[:, None, :] - pts[None, :, :]), axis=-1)
        mask = dist > 0
        for vals in top_vals:
            diff = np.max(np.abs(vals[:, None, :] - vals[None, :, :]), axis=-1)
            best = max(best, float(np.max(diff[mask] / dist[mask] ** alpha)))
    return best

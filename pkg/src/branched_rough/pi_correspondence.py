"""Free Grossman-Larson generators and the companion inhomogeneous geometric path.

The truncated Grossman-Larson algebra is free on a graded family of trees
``nu_1, ..., nu_K`` (with ``nu_i = .i`` for ``i <= d``).  Sending ``nu_k`` to the
letter ``k`` identifies it with the tensor algebra over ``K`` letters whose
words are weighted by ``|w| = sum |nu_{w_j}|``.  A character ``X`` is the
group-like element ``sum_rho (X, rho) rho / sigma(rho)``; rewriting it in the
monomials ``nu_w`` gives a shuffle character ``Z`` over words.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .character_group import basis
from .effect_integrator import Integral, extrapolate, integrate_one_form, lifted_one_form, _levels
from .forest_algebra import MAX_DEGREE, ForestLinComb, as_forest, encode, enumerate_trees, leaf, parse
from .one_form import PolynomialOneForm
from .rough_path import BranchedRoughPath, partition_indices

Word = tuple  # letters in 1..K


# ---------------------------------------------------------------------------
# exact linear algebra


def _row_reduce(rows: list) -> tuple[list, list]:
    """Reduced row echelon form over the rationals; returns (rows, pivot columns)."""
    m = [list(map(Fraction, r)) for r in rows]
    pivots = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(vectors: list) -> int:
    return len(_row_reduce(vectors)[1]) if vectors else 0


def inverse_matrix(m: list) -> list:
    n = len(m)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    red, piv = _row_reduce(aug)
    if piv[:n] != list(range(n)):
        raise ArithmeticError("singular matrix")
    return [row[n:] for row in red[:n]]


# ---------------------------------------------------------------------------
# generators


def _forests_of_exact_degree(d: int, n: int) -> list:
    return [f for f in basis(d, n).forests if f.degree == n]


@dataclass(frozen=True)
class GeneratorSet:
    d: int
    p_floor: int
    generators: tuple  # LabelledTree, nu_1..nu_K

    @property
    def K(self) -> int:
        return len(self.generators)

    @property
    def degrees(self) -> tuple:
        return tuple(g.degree for g in self.generators)

    def to_json(self) -> dict:
        return {"d": self.d, "p_floor": self.p_floor, "generators": [encode(g) for g in self.generators]}

    @classmethod
    def from_json(cls, obj: dict) -> "GeneratorSet":
        gens = tuple(parse(s).trees[0] for s in obj["generators"])
        return cls(int(obj["d"]), int(obj["p_floor"]), gens)

    @cached_property
    def words(self) -> "WordBasis":
        return WordBasis(self.degrees, self.p_floor)

    def monomial(self, w: Word) -> ForestLinComb:
        """``nu_{w_1} * ... * nu_{w_l}`` expanded in forests."""
        return _monomial(self.generators, tuple(w))

    @cached_property
    def change_of_basis(self) -> np.ndarray:
        """``Q[w, rho]`` with ``rho = sum_w Q[w, rho] nu_w``, as an object array of Fractions.

        Rows follow ``words.words``; columns follow the forests of ``basis(d, p_floor)``.
        """
        b = basis(self.d, self.p_floor)
        W = self.words
        Q = np.empty((len(W.words), b.n_forests), dtype=object)
        Q[...] = Fraction(0)
        for n in range(1, self.p_floor + 1):
            ws = [k for k, w in enumerate(W.words) if W.weight[k] == n]
            fs = [b.forest_index[f] for f in _forests_of_exact_degree(self.d, n)]
            P = [[self.monomial(W.words[k])[b.forests[j]] for k in ws] for j in fs]  # forests x words
            Pinv = inverse_matrix(P)  # words x forests
            for a, k in enumerate(ws):
                for c, j in enumerate(fs):
                    Q[k, j] = Pinv[a][c]
        return Q


@lru_cache(maxsize=None)
def _monomial(gens: tuple, w: Word) -> ForestLinComb:
    out = ForestLinComb.of(gens[w[0] - 1])
    for k in w[1:]:
        out = out.star(ForestLinComb.of(gens[k - 1]))
    return out


def _weighted_words(degrees: tuple, n: int) -> list:
    out = []
    K = len(degrees)

    def grow(prefix, weight):
        if prefix:
            out.append(tuple(prefix))
        for k in range(1, K + 1):
            if weight + degrees[k - 1] <= n:
                grow(prefix + [k], weight + degrees[k - 1])

    grow([], 0)
    return out


@dataclass(frozen=True)
class GeneratorReport:
    degree: int
    dim: int
    product_rank: int
    n_products: int
    new_generators: tuple


def compute_generators(d: int, p_floor: int, report: list | None = None) -> GeneratorSet:
    """Degree-graded free generators of the truncated Grossman-Larson algebra.

    At each degree the GL monomials in lower-degree generators span a subspace
    of the forest space; trees are added in canonical order while they raise
    the rank.  Raises ``ArithmeticError`` when the monomials are linearly
    dependent (the algebra would not be free) or trees cannot complete a basis.
    """
    if not 1 <= p_floor <= MAX_DEGREE:
        raise ValueError(f"p_floor must be in 1..{MAX_DEGREE}")
    gens: list = [leaf(i) for i in range(1, d + 1)]
    if report is not None:
        report.append(GeneratorReport(1, d, 0, 0, tuple(gens)))
    for n in range(2, p_floor + 1):
        forests = _forests_of_exact_degree(d, n)
        degrees = tuple(g.degree for g in gens)
        words = [w for w in _weighted_words(degrees, n) if sum(degrees[k - 1] for k in w) == n]
        vecs = [[_monomial(tuple(gens), w)[f] for f in forests] for w in words]
        r = rank(vecs)
        if r != len(words):
            raise ArithmeticError(f"degree {n}: {len(words)} monomials span only rank {r}; generators are not free")
        new = []
        for t in enumerate_trees(d, n):
            if t.degree != n:
                continue
            cand = vecs + [[Fraction(int(as_forest(t) == f)) for f in forests]]
            if rank(cand) > len(vecs):
                vecs = cand
                new.append(t)
        if len(vecs) != len(forests):
            raise ArithmeticError(f"degree {n}: trees complete only rank {len(vecs)} of {len(forests)}")
        if report is not None:
            report.append(GeneratorReport(n, len(forests), r, len(words), tuple(new)))
        gens.extend(new)
    return GeneratorSet(d, p_floor, tuple(gens))


def word_degree(w: Word, gens: GeneratorSet) -> int:
    if any(not 1 <= k <= gens.K for k in w):
        raise ValueError(f"word {w} has letters outside 1..{gens.K}")
    return sum(gens.degrees[k - 1] for k in w)


# ---------------------------------------------------------------------------
# words


class WordBasis:
    """Non-empty words over letters of given degrees, weight at most ``n``."""

    def __init__(self, degrees: tuple, n: int):
        self.degrees = tuple(degrees)
        self.n = n
        words = _weighted_words(self.degrees, n)
        self.words = sorted(words, key=lambda w: (self.weight_of(w), len(w), w))
        self.index = {w: k for k, w in enumerate(self.words)}
        self.weight = np.array([self.weight_of(w) for w in self.words])
        self.length = np.array([len(w) for w in self.words])

    def weight_of(self, w: Word) -> int:
        return sum(self.degrees[k - 1] for k in w)

    @cached_property
    def deconcat_table(self):
        """``(w, u, v)`` for every split ``w = u v`` into non-empty words."""
        rows = [(k, self.index[w[:c]], self.index[w[c:]]) for k, w in enumerate(self.words) for c in range(1, len(w))]
        if not rows:
            return tuple(np.zeros(0, dtype=int) for _ in range(3))
        return tuple(np.array(col) for col in zip(*rows))

    def product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Concatenation product of group-like elements given by their non-empty-word values."""
        w, u, v = self.deconcat_table
        out = a + b
        _add_cols(out, w, a[..., u] * b[..., v])
        return out

    def inverse(self, a: np.ndarray) -> np.ndarray:
        w, u, v = self.deconcat_table
        inv = np.zeros_like(a)
        for k in np.argsort(self.length, kind="stable"):
            sel = w == k
            inv[..., k] = -a[..., k] - np.sum(a[..., u[sel]] * inv[..., v[sel]], axis=-1)
        return inv

    def shuffle_pairs(self):
        """``(u, v, {w: mult})`` for all pairs with ``|u| + |v| <= n``."""
        for u, v in itertools.product(self.words, repeat=2):
            if self.weight_of(u) + self.weight_of(v) <= self.n:
                yield u, v, shuffle(u, v)


def _add_cols(out, cols, vals):
    if len(cols) == 0:
        return
    for c in np.unique(cols):
        out[..., c] += vals[..., cols == c].sum(axis=-1)


@lru_cache(maxsize=None)
def shuffle(u: Word, v: Word) -> Counter:
    if not u:
        return Counter({v: 1})
    if not v:
        return Counter({u: 1})
    out = Counter()
    for w, m in shuffle(u[:-1], v).items():
        out[w + (u[-1],)] += m
    for w, m in shuffle(u, v[:-1]).items():
        out[w + (v[-1],)] += m
    return out


# ---------------------------------------------------------------------------
# the companion path


@dataclass(frozen=True, eq=False)
class PiRoughPath:
    gens: GeneratorSet
    times: np.ndarray
    values: np.ndarray  # (N, n_words): (Z_{0,t}, w)
    x0: np.ndarray  # start point of the level-one path

    @property
    def words(self) -> WordBasis:
        return self.gens.words

    def index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-12:
            raise ValueError(f"time {t} is not on the sample grid")
        return k

    def coordinates(self) -> np.ndarray:
        """Coordinate paths ``z^k_t = (Z_{0,t}, k)``, shape ``(N, K)``."""
        W = self.words
        return self.values[:, [W.index[(k,)] for k in range(1, self.gens.K + 1)]]

    def increments(self, i, j) -> np.ndarray:
        W = self.words
        return W.product(W.inverse(self.values[i]), self.values[j])

    def increment(self, s: float, t: float) -> dict:
        vals = self.increments(np.array([self.index(s)]), np.array([self.index(t)]))[0]
        return dict(zip(self.words.words, vals))

    def shuffle_defect(self, s: float | None = None, t: float | None = None) -> float:
        """Worst ``|(Z,u)(Z,v) - (Z, u sh v)|`` over word pairs, on ``Z_{s,t}``."""
        i = 0 if s is None else self.index(s)
        j = len(self.times) - 1 if t is None else self.index(t)
        z = self.increments(np.array([i]), np.array([j]))[0]
        W = self.words
        worst = 0.0
        for u, v, sh in W.shuffle_pairs():
            rhs = sum(m * z[W.index[w]] for w, m in sh.items())
            worst = max(worst, abs(z[W.index[u]] * z[W.index[v]] - rhs))
        return worst

    def p_variation(self, p: float, max_points: int | None = 65) -> float:
        """Grid p-variation with the homogeneous norm ``max_w |(Z, w)|^(1/|w|)``."""
        m = len(self.times)
        idx = np.arange(m)
        if max_points is not None and m > max_points:
            idx = partition_indices(0, m - 1, int(np.ceil((m - 1) / (max_points - 1))))
        W = self.words
        vals = self.values[idx]
        inv = W.inverse(vals)
        best = np.zeros(len(idx))
        for j in range(1, len(idx)):
            inc = W.product(inv[:j], np.broadcast_to(vals[j], (j, vals.shape[1])))
            cost = np.max(np.abs(inc) ** (1.0 / W.weight), axis=-1) ** p
            best[j] = np.max(best[:j] + cost)
        return float(best[-1] ** (1.0 / p))


def pi_values(gens: GeneratorSet, tree_vals: np.ndarray) -> np.ndarray:
    """Word values ``(Z, w) = sum_rho Q[w, rho] (X, rho) / sigma(rho)`` of characters ``X``."""
    b = basis(gens.d, gens.p_floor)
    Q = gens.change_of_basis.astype(float)
    fv = b.forest_values(np.asarray(tree_vals, dtype=float)) / b.forest_sigma
    return fv @ Q.T


def build_companion_pi_path(X: BranchedRoughPath, gens: GeneratorSet | None = None) -> PiRoughPath:
    """The shuffle-character path isomorphic to ``X`` under ``nu_k -> k``."""
    gens = compute_generators(X.d, X.p_floor) if gens is None else gens
    if gens.d != X.d or gens.p_floor != X.p_floor:
        raise ValueError("generator set and path live over different bases")
    inc0 = X.increments(np.zeros(len(X), dtype=int), np.arange(len(X)))
    return PiRoughPath(gens, X.times, pi_values(gens, inc0), X.level1()[0].copy())


def signature_of_coordinates(Z: PiRoughPath) -> np.ndarray:
    """Iterated Riemann-Stieltjes integrals of the piecewise-linear coordinate path.

    Independent route to ``(Z_{0,t}, w)``: on each segment the signature is the
    tensor exponential of the increment, truncated by word weight.
    """
    W = Z.words
    z = Z.coordinates()
    dz = np.diff(z, axis=0)
    fact = np.array([float(np.prod(np.arange(1, L + 1))) for L in W.length])
    seg = np.stack([np.prod(dz[:, [k - 1 for k in w]], axis=1) for w in W.words], axis=1) / fact
    out = np.zeros_like(Z.values)
    for k in range(len(seg)):
        out[k + 1] = W.product(out[k], seg[k])
    return out


# ---------------------------------------------------------------------------
# first-level integrals


@dataclass(frozen=True)
class _TaylorTerm:
    word_index: int
    output: tuple  # e polynomials


def _taylor_terms(f: PolynomialOneForm, gens: GeneratorSet) -> list:
    """Terms ``D^l_{i_1..i_l} f_{nu_k}`` paired with words ``i_1 .. i_l k``."""
    W = gens.words
    terms = []
    for k, nu in enumerate(gens.generators, start=1):
        base = f.f_tau(nu)
        for l in range(0, gens.p_floor - nu.degree + 1):
            for inner in itertools.product(range(1, gens.d + 1), repeat=l):
                polys = base
                for i in inner:
                    polys = tuple(p.diff(i) for p in polys)
                if all(p.is_zero() for p in polys):
                    continue
                terms.append(_TaylorTerm(W.index[inner + (k,)], polys))
    return terms


def _pi_riemann_terms(f: PolynomialOneForm, Z: PiRoughPath, idx: np.ndarray, terms=None) -> np.ndarray:
    terms = _taylor_terms(f, Z.gens) if terms is None else terms
    x = Z.x0 + Z.coordinates()[idx[:-1], : Z.gens.d]
    inc = Z.increments(idx[:-1], idx[1:])
    out = np.zeros((len(idx) - 1, f.e))
    for term in terms:
        for c, poly in enumerate(term.output):
            if not poly.is_zero():
                out[:, c] += np.broadcast_to(poly(x), (len(x),)) * inc[:, term.word_index]
    return out


def first_level_pi_integral(f: PolynomialOneForm, Z: PiRoughPath, gens: GeneratorSet | None, s: float, t: float, refine: int = 2, tol: float = 1e-6) -> Integral:
    """``sum_k int g_k(x) dz^k`` with ``g_k = f_{nu_k}``, as a limit of Taylor-compensated sums."""
    gens = Z.gens if gens is None else gens
    if f.d != gens.d:
        raise ValueError("one-form and generators over different labels")
    i0, i1 = Z.index(s), Z.index(t)
    if i1 <= i0:
        z = np.zeros(f.e)
        return Integral(z, z, 0.0, (), np.zeros(f.e))
    terms = _taylor_terms(f, gens)
    sums = [_pi_riemann_terms(f, Z, partition_indices(i0, i1, st), terms).sum(axis=0) for st in _levels(refine)]
    return extrapolate(sums, gens.p_floor, tol)


@dataclass(frozen=True)
class FirstLevelComparison:
    branched: np.ndarray
    pi: np.ndarray
    gap: float
    taylor_residuals: list = field(default_factory=list)  # per level, finest first
    omegas: list = field(default_factory=list)  # largest ||X_{r,r'}||^p per level
    shuffle_defect: float = 0.0


def compare_first_levels(f: PolynomialOneForm, X: BranchedRoughPath, s: float, t: float, refine: int = 2, gens: GeneratorSet | None = None) -> FirstLevelComparison:
    """Branched and companion first-level integrals, plus the termwise Taylor residual.

    The residual at a level is the worst per-interval difference between
    ``sum_tau f_tau(x_r) (X_{r,r'}, tau) / sigma(tau)`` and its word expansion.
    """
    gens = compute_generators(X.d, X.p_floor) if gens is None else gens
    Z = build_companion_pi_path(X, gens)
    beta = lifted_one_form(f, X)
    branched = integrate_one_form(beta, X, s, t, refine)
    pi = first_level_pi_integral(f, Z, gens, s, t, refine)
    i0, i1 = X.index(s), X.index(t)
    terms = _taylor_terms(f, gens)
    residuals, omegas = [], []
    for stride in _levels(refine):
        idx = partition_indices(i0, i1, stride)
        fv = X.basis.forest_values(X.increments(idx[:-1], idx[1:]))
        lhs = np.einsum("kfe,kf->ke", beta[idx[:-1]], fv)
        rhs = _pi_riemann_terms(f, Z, idx, terms)
        residuals.append(float(np.max(np.abs(lhs - rhs), initial=0.0)))
        omegas.append(float(np.max(X.basis.norm(X.increments(idx[:-1], idx[1:])), initial=0.0) ** X.p))
    gap = float(np.max(np.abs(branched.value - pi.value), initial=0.0))
    return FirstLevelComparison(branched.value, pi.value, gap, residuals, omegas, Z.shuffle_defect(s, t))

"""Effects, compensated Riemann sums and the rough integral ``Y`` of a one-form.

A one-form along ``X`` is a field of fiber elements ``phi = sum_rho phi^rho``
paired with characters.  Arrays of fiber elements carry the forest axis of the
driver basis; a leading axis runs over partition points.

Limits over partitions are estimated on nested partitions of the sample grid
(strides ``1, 2, 4, ...``).  The finest Riemann sum and the Cauchy gap between
the two finest sums are reported, and the limit itself is estimated by
Richardson extrapolation with the per-component order observed from the last
three sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import floor

import numpy as np

from .character_group import Character, GradedBasis, basis
from .forest_algebra import EMPTY, LabelledForest, as_forest, encode
from .one_form import PolynomialOneForm
from .rough_path import BranchedRoughPath, ControlFn, partition_indices


class NonConvergenceError(ArithmeticError):
    """Riemann sums on refining partitions fail to settle."""


# ---------------------------------------------------------------------------
# fiber elements


def pair(coeffs: np.ndarray, forest_vals: np.ndarray) -> np.ndarray:
    """``sum_rho coeffs[..., rho, (e)] (a, rho)`` with forest values of shape ``(..., F)``."""
    if coeffs.ndim == forest_vals.ndim:
        return np.einsum("...f,...f->...", coeffs, forest_vals)
    return np.einsum("...fe,...f->...e", coeffs, forest_vals)


def fiber_product(b: GradedBasis, a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``phi_1 phi_2``: coefficient ``a^r1 c^r2`` on ``r1 r2``, truncated at degree ``n``.

    Arrays have the forest axis last; the product is taken entrywise over any
    leading axes.
    """
    i, j, k = b.concat_table
    out = np.zeros(np.broadcast_shapes(a.shape, c.shape))
    _scatter_add(out, k, a[..., i] * c[..., j])
    return out


def fiber_graft(b: GradedBasis, a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``phi_1 > phi_2``: coefficient ``a^rho c^tau`` on ``rho > tau``; ``c`` must live on trees."""
    if np.any(c[..., ~b.is_tree] != 0):
        raise ValueError("the right factor of a graft must have tree support only")
    i, j, k = b.graft_table
    out = np.zeros(np.broadcast_shapes(a.shape, c.shape))
    _scatter_add(out, k, a[..., i] * c[..., j])
    return out


def _scatter_add(out: np.ndarray, cols: np.ndarray, vals: np.ndarray):
    if len(cols) == 0:
        return
    # matmul against a 0/1 scatter matrix sums repeated targets
    s = np.zeros((len(cols), out.shape[-1]))
    s[np.arange(len(cols)), cols] = 1.0
    out += vals @ s


def translation_matrix(b: GradedBasis, bvals: np.ndarray) -> np.ndarray:
    """Matrix ``M`` with ``(phi_b)^lam = sum_rho M[rho, lam] phi^rho``.

    ``phi_b(c) = phi(bc) - phi(b)`` expands ``(bc, rho) = sum (b, rho_1)(c, rho_2)``;
    the terms with ``rho_2 = e`` make up ``phi(b)`` and drop out.
    """
    target, left, right, mult = b.forest_coproduct_table
    eb = b.ext_values(bvals)
    keep = right > 0
    m = np.zeros(bvals.shape[:-1] + (b.n_forests, b.n_forests))
    for t, l, r, w in zip(target[keep], left[keep], right[keep], mult[keep]):
        m[..., t, r - 1] += w * eb[..., l]
    return m


@dataclass(frozen=True, eq=False)
class OneFormRep:
    """Fiber element ``phi = sum_rho phi^rho`` with ``R^e``-valued coefficients."""

    d: int
    p_floor: int
    coeffs: np.ndarray  # (n_forests, e)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] != self.basis.n_forests:
            raise ValueError(f"expected {self.basis.n_forests} forest coefficients, got {c.shape[0]}")
        object.__setattr__(self, "coeffs", c)

    @property
    def basis(self) -> GradedBasis:
        return basis(self.d, self.p_floor)

    @property
    def e(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def from_terms(cls, d: int, p_floor: int, terms: dict, e: int = 1) -> "OneFormRep":
        b = basis(d, p_floor)
        c = np.zeros((b.n_forests, e))
        for rho, v in terms.items():
            c[b.forest_index[as_forest(rho)]] += np.atleast_1d(np.asarray(v, dtype=float))
        return cls(d, p_floor, c)

    def terms(self) -> dict:
        return {encode(f): self.coeffs[k].tolist() for k, f in enumerate(self.basis.forests) if np.any(self.coeffs[k])}

    def _check(self, a: Character):
        if a.d != self.d or a.p_floor != self.p_floor:
            raise ValueError("character and fiber element live over different bases")

    def evaluate(self, a: Character) -> np.ndarray:
        self._check(a)
        return pair(self.coeffs, self.basis.forest_values(a.values.astype(float)))

    def translate(self, b: Character) -> "OneFormRep":
        """``phi_b(c) = phi(bc) - phi(b)`` as a fiber element."""
        self._check(b)
        m = translation_matrix(self.basis, b.values.astype(float))
        return OneFormRep(self.d, self.p_floor, m.T @ self.coeffs)

    def __mul__(self, other: "OneFormRep") -> "OneFormRep":
        return OneFormRep(self.d, self.p_floor, fiber_product(self.basis, self.coeffs.T, other.coeffs.T).T)

    def graft(self, other: "OneFormRep") -> "OneFormRep":
        return OneFormRep(self.d, self.p_floor, fiber_graft(self.basis, self.coeffs.T, other.coeffs.T).T)

    def __add__(self, other: "OneFormRep") -> "OneFormRep":
        return OneFormRep(self.d, self.p_floor, self.coeffs + other.coeffs)

    def scale(self, c) -> "OneFormRep":
        return OneFormRep(self.d, self.p_floor, self.coeffs * c)


def translate(phi: OneFormRep, b: Character) -> OneFormRep:
    return phi.translate(b)


# ---------------------------------------------------------------------------
# lifted one-form and Riemann sums


def lifted_one_form(f: PolynomialOneForm, X: BranchedRoughPath, idx=None) -> np.ndarray:
    """Coefficients of ``beta(X_r)`` at grid indices ``idx``; shape ``(len(idx), F, e)``.

    Tree ``tau`` carries ``f_tau(x_r) / sigma(tau)``; non-tree forests carry 0.
    """
    if f.d != X.d:
        raise ValueError(f"one-form over {f.d} labels, path over {X.d}")
    b = X.basis
    idx = np.arange(len(X)) if idx is None else np.asarray(idx)
    coeffs = f.beta_coefficients(b, X.level1()[idx])
    out = np.zeros((len(idx), b.n_forests, f.e))
    out[:, b.tree_as_forest, :] = coeffs
    return out


def riemann_increments(beta: np.ndarray, X: BranchedRoughPath, idx: np.ndarray) -> np.ndarray:
    """Terms ``beta(X_{r_k})(X_{r_k, r_k+1})`` of the Riemann sum on partition ``idx``."""
    fv = X.basis.forest_values(X.increments(idx[:-1], idx[1:]))
    return pair(beta[:-1], fv)


@dataclass(frozen=True)
class Integral:
    value: np.ndarray  # extrapolated limit
    riemann: np.ndarray  # Riemann sum on the finest partition
    gap: float  # |finest - next coarser|
    gaps: tuple  # gaps between successive levels, coarse to fine
    order: np.ndarray  # observed convergence order per component


def _levels(levels: int) -> list:
    if levels < 1:
        raise ValueError("need at least one coarsening level")
    return [2**k for k in range(levels + 1)]  # strides, finest first


def extrapolate(sums: list, fallback_order: int, tol: float = 1e-6) -> Integral:
    """Limit estimate from Riemann sums on nested partitions, finest first."""
    sums = [np.asarray(s, dtype=float) for s in sums]
    s0 = sums[0]
    gaps = tuple(float(np.max(np.abs(a - b), initial=0.0)) for a, b in zip(sums[1:], sums[:-1]))[::-1]
    if len(sums) == 1:
        return Integral(s0, s0, 0.0, (), np.full(s0.shape, fallback_order))
    s1 = sums[1]
    d01 = s0 - s1
    scale = 1.0 + np.abs(s0)
    order = np.full(s0.shape, fallback_order, dtype=float)
    if len(sums) >= 3:
        d12 = s1 - sums[2]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.abs(d12) / np.abs(d01)
            obs = np.rint(np.log2(ratio))
        ok = np.isfinite(obs) & (np.abs(d12) > 1e-14 * scale)
        order = np.where(ok, np.clip(obs, 1, 4), order)
    tiny = np.abs(d01) <= 1e-14 * scale
    value = np.where(tiny, s0, s0 + d01 / (2.0**order - 1.0))
    if len(gaps) >= 2 and gaps[-1] > gaps[-2] and gaps[-1] > tol * float(np.max(scale)):
        raise NonConvergenceError(f"Riemann sums not contracting: gaps {gaps[-2]:.3e} -> {gaps[-1]:.3e}")
    return Integral(value, s0, gaps[-1], gaps, order)


def integrate_one_form(beta, X: BranchedRoughPath, s: float, t: float, refine: int = 2, tol: float = 1e-6) -> Integral:
    """Limit of ``sum beta(X_{t_k})(X_{t_k,t_k+1})`` over nested partitions of ``[s, t]``.

    ``beta`` is a coefficient array ``(N, F, e)`` over the sample grid or a
    callable mapping a grid index to a ``OneFormRep``.
    """
    i0, i1 = X.index(s), X.index(t)
    if i1 < i0:
        raise ValueError("need s <= t")
    if callable(beta):
        beta = np.stack([beta(k).coeffs for k in range(len(X))])
    beta = np.asarray(beta, dtype=float)
    if beta.ndim == 2:
        beta = beta[..., None]
    if i1 == i0:
        z = np.zeros(beta.shape[-1])
        return Integral(z, z, 0.0, (), np.zeros(beta.shape[-1]))
    sums = []
    for stride in _levels(refine):
        idx = partition_indices(i0, i1, stride)
        sums.append(riemann_increments(beta[idx], X, idx).sum(axis=0))
    return extrapolate(sums, X.p_floor, tol)


@dataclass(frozen=True, eq=False)
class EffectPath:
    """``y_t = xi + sum beta(X_r)(X_{r,r'})`` along a partition, with its one-form."""

    base: BranchedRoughPath
    indices: np.ndarray
    values: np.ndarray  # (m+1, e)
    oneform: np.ndarray  # (m+1, F, e)

    @property
    def times(self) -> np.ndarray:
        return self.base.times[self.indices]

    def oneform_at(self, t: float) -> OneFormRep:
        k = int(np.nonzero(self.indices == self.base.index(t))[0][0])
        return OneFormRep(self.base.d, self.base.p_floor, self.oneform[k])


def effect_path(beta: np.ndarray, X: BranchedRoughPath, xi=None, stride: int = 1) -> EffectPath:
    """Cumulative Riemann sums of ``beta`` on the stride-``stride`` partition of the grid."""
    beta = np.asarray(beta, dtype=float)
    if beta.ndim == 2:
        beta = beta[..., None]
    idx = partition_indices(0, len(X) - 1, stride)
    inc = riemann_increments(beta[idx], X, idx)
    xi = np.zeros(beta.shape[-1]) if xi is None else np.atleast_1d(np.asarray(xi, dtype=float))
    vals = np.concatenate([xi[None, :], xi + np.cumsum(inc, axis=0)])
    return EffectPath(X, idx, vals, beta[idx])


def _scalar_effect(y: EffectPath) -> tuple[np.ndarray, np.ndarray]:
    if y.values.shape[-1] != 1:
        raise ValueError("effect products need scalar (e = 1) effects")
    return y.values[:, 0], y.oneform[..., 0]


def multiply_effects(y1: EffectPath, y2: EffectPath) -> np.ndarray:
    """One-form of ``y1 y2``: ``y1 beta_2 + beta_1 y2 + beta_1 beta_2``."""
    u1, b1 = _scalar_effect(y1)
    u2, b2 = _scalar_effect(y2)
    b = y1.base.basis
    return (u1[:, None] * b2 + b1 * u2[:, None] + fiber_product(b, b1, b2))[..., None]


def graft_effects(y1: EffectPath, beta2: np.ndarray) -> np.ndarray:
    """One-form of ``t -> int y1 dy2`` where ``y2`` has tree-supported one-form ``beta2``."""
    u1, b1 = _scalar_effect(y1)
    beta2 = np.asarray(beta2, dtype=float)
    b2 = beta2[..., 0] if beta2.ndim == 3 else beta2
    b = y1.base.basis
    return (u1[:, None] * b2 + fiber_graft(b, b1, b2))[..., None]


# ---------------------------------------------------------------------------
# the rough integral


def _check_pair(f: PolynomialOneForm, X: BranchedRoughPath):
    if f.d != X.d:
        raise ValueError(f"one-form over {f.d} labels, path over {X.d}")
    if f.gamma <= X.p:
        raise ValueError(f"need gamma > p, got gamma={f.gamma}, p={X.p}")


def _effect_recursion(f: PolynomialOneForm, X: BranchedRoughPath, idx: np.ndarray):
    """Partial integrals ``(Y_{s,r}, rho)`` and their one-forms along partition ``idx``.

    Returns ``(U, Phi)`` keyed by forests over ``e`` labels; ``U[rho]`` has shape
    ``(m+1,)`` and ``Phi[rho]`` shape ``(m+1, F_X)``.
    """
    bx = X.basis
    by = basis(f.e, X.p_floor)
    beta = lifted_one_form(f, X, idx)  # (m+1, F, e)
    fv = bx.forest_values(X.increments(idx[:-1], idx[1:]))
    zero = np.zeros(1)
    U: dict = {}
    Phi: dict = {}
    for rho in by.forests:  # ascending degree
        if rho.is_tree:
            tree = rho.trees[0]
            bj = beta[:, :, tree.label - 1]
            inner = LabelledForest(tree.children)
            if inner == EMPTY:
                phi = bj
            else:
                phi = U[inner][:, None] * bj + fiber_graft(bx, Phi[inner], bj)
            u = np.concatenate([zero, np.cumsum(pair(phi[:-1], fv))])
        else:
            first, rest = rho.trees[0], LabelledForest(rho.trees[1:])
            f1 = as_forest(first)
            u = U[f1] * U[rest]
            phi = U[f1][:, None] * Phi[rest] + Phi[f1] * U[rest][:, None] + fiber_product(bx, Phi[f1], Phi[rest])
        U[rho] = u
        Phi[rho] = phi
    return U, Phi


def _tree_array(by: GradedBasis, U: dict, k=-1) -> np.ndarray:
    return np.stack([U[as_forest(t)][k] for t in by.trees], axis=-1)


def integral_levels(f: PolynomialOneForm, X: BranchedRoughPath, i0: int, i1: int, refine: int = 2):
    """Tree values of ``Y_{s,t}`` on each nested partition (finest first) and the ``U, Phi`` of the finest."""
    out = []
    finest = None
    for stride in _levels(refine):
        idx = partition_indices(i0, i1, stride)
        U, Phi = _effect_recursion(f, X, idx)
        if finest is None:
            finest = (idx, U, Phi)
        out.append(_tree_array(basis(f.e, X.p_floor), U))
    return out, finest


@dataclass(frozen=True)
class IntegralResult:
    Y: Character
    riemann: Character
    gap: float
    order: np.ndarray


def full_integral_result(f: PolynomialOneForm, X: BranchedRoughPath, s: float, t: float, refine: int = 2, tol: float = 1e-6) -> IntegralResult:
    _check_pair(f, X)
    i0, i1 = X.index(s), X.index(t)
    if i1 < i0:
        raise ValueError("need s <= t")
    if i1 == i0:
        ident = Character.identity(f.e, X.p_floor)
        return IntegralResult(ident, ident, 0.0, np.zeros(0))
    sums, _ = integral_levels(f, X, i0, i1, refine)
    est = extrapolate(sums, X.p_floor, tol)
    return IntegralResult(
        Character(f.e, X.p_floor, est.value),
        Character(f.e, X.p_floor, est.riemann),
        est.gap,
        est.order,
    )


def full_integral(f: PolynomialOneForm, X: BranchedRoughPath, s: float, t: float, refine: int = 2, tol: float = 1e-6) -> Character:
    """The increment ``Y_{s,t}`` of the rough integral, a character over ``e`` labels."""
    return full_integral_result(f, X, s, t, refine, tol).Y


def integral_path(f: PolynomialOneForm, X: BranchedRoughPath, xi=None, refine: int = 2, tol: float = 1e-6) -> BranchedRoughPath:
    """``Y`` as a branched rough path over ``e`` labels on the coarsest partition.

    ``Y_t = Y_0 Y_{0,t}`` with ``Y_0`` carrying ``xi`` in degree one.
    """
    _check_pair(f, X)
    strides = _levels(refine)
    coarse = partition_indices(0, len(X) - 1, strides[-1])
    sums = []
    for stride in strides:
        idx = partition_indices(0, len(X) - 1, stride)
        U, _ = _effect_recursion(f, X, idx)
        pos = np.searchsorted(idx, coarse)
        sums.append(np.stack([U[as_forest(tr)][pos] for tr in basis(f.e, X.p_floor).trees], axis=-1))
    est = extrapolate(sums, X.p_floor, tol)
    by = basis(f.e, X.p_floor)
    y0 = np.zeros(by.n_trees)
    if xi is not None:
        y0[: f.e] = np.atleast_1d(xi)
    vals = by.product(np.broadcast_to(y0, est.value.shape), est.value)
    return BranchedRoughPath(X.times[coarse], vals, X.p, f.e)


def y_tilde(f: PolynomialOneForm, X: BranchedRoughPath, s: float, t: float) -> dict:
    """``(Ytilde_{s,t}, rho) = B_rho(X_{s,t})`` for every forest over ``e`` labels, with ``eps -> 1``.

    ``B_{.j} = beta^j(X_s)``, ``B_{[rho]_j} = B_rho > B_{.j}``, products multiply.
    """
    _check_pair(f, X)
    i0, i1 = X.index(s), X.index(t)
    by = basis(f.e, X.p_floor)
    idx = np.array([i0, i1])
    _, Phi = _effect_recursion(f, X, idx)
    fv = X.basis.forest_values(X.increments(idx[:1], idx[1:]))[0]
    out = {EMPTY: 1.0}
    for rho in by.forests:
        out[rho] = float(pair(Phi[rho][0], fv))
    return out


def y_tilde_values(f: PolynomialOneForm, X: BranchedRoughPath, s: float, t: float) -> np.ndarray:
    by = basis(f.e, X.p_floor)
    yt = y_tilde(f, X, s, t)
    return np.array([yt[rho] for rho in by.forests])


def local_error_report(f: PolynomialOneForm, X: BranchedRoughPath, levels=range(1, 8), refine: int = 2, omega_points: int = 65) -> list:
    """Per dyadic scale: worst ``|Y - Ytilde|`` over forests, worst level-one remainder, worst ``omega``.

    Scale ``k`` splits the grid into ``2^k`` equal runs of samples.
    """
    _check_pair(f, X)
    n = len(X) - 1
    by = basis(f.e, X.p_floor)
    rows = []
    for k in levels:
        step = n // 2**k
        if step < 1:
            break
        rem = lvl1 = om = 0.0
        for a in range(0, n - step + 1, step):
            s, t = X.times[a], X.times[a + step]
            Y = full_integral(f, X, s, t, refine)
            yv = by.forest_values(Y.values)
            yt = y_tilde_values(f, X, s, t)
            rem = max(rem, float(np.max(np.abs(yv - yt))))
            lvl1 = max(lvl1, float(np.max(np.abs(yv[by.tree_as_forest[: f.e]] - yt[by.tree_as_forest[: f.e]]))))
            om = max(om, X.p_variation(s, t, max_points=omega_points) ** X.p)
        rows.append({"scale": float(X.times[step] - X.times[0]), "remainder": rem, "level1_remainder": lvl1, "omega": om})
    return rows


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def theta(p: float, gamma: float) -> float:
    return min(gamma, floor(p) + 1) / p


def control(X: BranchedRoughPath) -> ControlFn:
    return ControlFn(X)

"""Invariant suites behind the ``verify`` command.

Each check returns a :class:`Check` with the measured value and the
threshold it was held to; a suite is a list of checks.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .character_group import Character, basis, is_character, product_of_forest_maps
from .effect_integrator import (
    full_integral,
    integral_path,
    integrate_one_form,
    lifted_one_form,
    local_error_report,
    loglog_slope,
    theta,
)
from .fixtures import constant_form, identity_form, random_polynomial_form, rotation_form, smooth_path
from .forest_algebra import EMPTY, as_forest, coproduct, gl_product, graft_onto, graft_root, symmetry_factor
from .one_form import PolynomialOneForm
from .pi_correspondence import compare_first_levels, compute_generators
from .rough_path import BranchedRoughPath, canonical_lift, dp_metric, ito_like_lift, p_variation

SUITES = ("algebra", "analysis", "pi")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_json(self) -> dict:
        out = asdict(self)
        out["value"] = float(self.value)
        out["threshold"] = float(self.threshold)
        return out


# ---------------------------------------------------------------------------
# algebra


def _as_counter(terms) -> Counter:
    out = Counter()
    for left, right, m in terms:
        out[(left, right)] += m
    return out


def coassociativity_defect(rho) -> int:
    """Number of triples where ``(Delta x id) Delta`` and ``(id x Delta) Delta`` disagree."""
    lhs, rhs = Counter(), Counter()
    for left, right, m in coproduct(rho):
        for ll, lr, m2 in coproduct(left):
            lhs[(ll, lr, right)] += m * m2
        for rl, rr, m2 in coproduct(right):
            rhs[(left, rl, rr)] += m * m2
    return sum(1 for k in set(lhs) | set(rhs) if lhs[k] != rhs[k])


def counit_defect(rho) -> int:
    rho = as_forest(rho)
    terms = _as_counter(coproduct(rho))
    left_unit = {r: m for (l, r), m in terms.items() if l == EMPTY}
    right_unit = {l: m for (l, r), m in terms.items() if r == EMPTY}
    return int(left_unit != {rho: 1}) + int(right_unit != {rho: 1})


def tree_coproduct_defect(rho, j: int) -> int:
    """``Delta [rho]_j = [rho]_j x 1 + sum rho_(1) x [rho_(2)]_j``."""
    tree = as_forest(graft_root(rho, j))
    expect = Counter({(tree, EMPTY): 1})
    for left, right, m in coproduct(rho):
        expect[(left, as_forest(graft_root(right, j)))] += m
    got = _as_counter(coproduct(tree))
    return sum(1 for k in set(got) | set(expect) if got[k] != expect[k])


def graft_coproduct_defect(rho, tau) -> int:
    """``Delta (rho > tau) = (rho > tau) x 1 + sum rho_(1) tau_(1) x rho_(2) > tau_(2)``, ``tau_(2) != e``."""
    g = as_forest(graft_onto(rho, tau))
    expect = Counter({(g, EMPTY): 1})
    for r1, r2, m1 in coproduct(rho):
        for t1, t2, m2 in coproduct(tau):
            if t2 == EMPTY:
                continue
            expect[(r1 * t1, as_forest(graft_onto(r2, t2.trees[0])))] += m1 * m2
    got = _as_counter(coproduct(g))
    return sum(1 for k in set(got) | set(expect) if got[k] != expect[k])


def duality_defect(a: Character, b: Character) -> Fraction:
    """Largest ``|(ab, tau) - sum sigma(tau)/(sigma1 sigma2) (r1*r2, tau)(a, r1)(b, r2)|``."""
    n = a.p_floor
    fa, fb = a.forest_map(), b.forest_map()
    prod = (a * b).forest_map()
    forests = [EMPTY] + list(a.basis.forests)
    acc = {tau: Fraction(0) for tau in a.basis.forests}
    for r1 in forests:
        for r2 in forests:
            if r1.degree + r2.degree > n or r1.degree + r2.degree == 0:
                continue
            s12 = symmetry_factor(r1) * symmetry_factor(r2)
            for tau, c in gl_product(r1, r2):
                acc[tau] += Fraction(symmetry_factor(tau), s12) * c * fa[r1] * fb[r2]
    return max(abs(prod[tau] - acc[tau]) for tau in a.basis.forests)


def depth_one_forests(d: int, max_degree: int) -> list:
    """Forests of single vertices ``.i1 ... .il`` (including the empty forest)."""
    out = [EMPTY]
    for tau in basis(d, max(max_degree, 1)).forests:
        if tau.depth == 1 and tau.degree <= max_degree:
            out.append(tau)
    return out


def b_equals_c_defect(f: PolynomialOneForm, x, a: Character, X: Character) -> Fraction:
    """Exact gap between the Taylor double sum ``B`` and the GL-expanded ``C``.

    ``B = sum_tau sum_rho D^rho f_tau(x) / (sigma(tau) sigma(rho)) (X, rho)(a, tau)``
    over depth-one ``rho``; ``C = sum_tau f_tau(x) / sigma(tau) ((Xa, tau) - (X, tau))``
    with ``(Xa, tau)`` expanded through Grossman-Larson products.
    """
    n = a.p_floor
    x = np.array([Fraction(v) for v in x], dtype=object)
    fX, fa = X.forest_map(), a.forest_map()
    B = np.array([Fraction(0)] * f.e, dtype=object)
    for tau in a.basis.trees:
        ftau = f.f_tau(tau)
        for rho in depth_one_forests(f.d, n - tau.degree):
            polys = ftau
            for v in rho.trees:
                polys = tuple(p.diff(v.label) for p in polys)
            w = Fraction(1, symmetry_factor(tau) * symmetry_factor(rho)) * fX[rho] * fa[as_forest(tau)]
            B = B + np.array([p(x) * w for p in polys], dtype=object)
    forests = [EMPTY] + list(a.basis.forests)
    C = np.array([Fraction(0)] * f.e, dtype=object)
    for r1 in forests:
        for r2 in a.basis.forests:  # r2 = e gives (X, tau), which cancels
            if r1.degree + r2.degree > n:
                continue
            s12 = symmetry_factor(r1) * symmetry_factor(r2)
            for tau, c in gl_product(r1, r2):
                if not tau.is_tree:
                    continue
                w = c * fX[r1] * fa[r2] / s12
                C = C + np.array([p(x) * w for p in f.f_tau(tau.trees[0])], dtype=object)
    return max(abs(u - v) for u, v in zip(B, C))


def algebra_suite(d: int = 2, n: int = 3, instances: int = 100, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    b = basis(d, n)
    checks = []
    coassoc = sum(coassociativity_defect(rho) for rho in b.forests)
    checks.append(Check("coassociativity", coassoc == 0, coassoc, 0, f"{b.n_forests} forests"))
    counit = sum(counit_defect(rho) for rho in b.forests)
    checks.append(Check("counit", counit == 0, counit, 0))
    tree_id = sum(tree_coproduct_defect(rho, j) for rho in [EMPTY] + [f for f in b.forests if f.degree < n] for j in range(1, d + 1))
    checks.append(Check("coproduct_of_grafted_root", tree_id == 0, tree_id, 0))
    graft_id = sum(
        graft_coproduct_defect(rho, tau)
        for rho in [EMPTY] + list(b.forests)
        for tau in b.trees
        if rho.degree + tau.degree <= n
    )
    checks.append(Check("coproduct_of_graft", graft_id == 0, graft_id, 0))

    closure = assoc = inv = dual = 0
    bc = Fraction(0)
    for _ in range(instances):
        a1 = Character.random(d, n, rng, exact=True)
        a2 = Character.random(d, n, rng, exact=True)
        a3 = Character.random(d, n, rng, exact=True)
        conv = product_of_forest_maps(a1.forest_map(), a2.forest_map(), n)
        closure += int(not is_character(conv, 0) or conv != (a1 * a2).forest_map())
        assoc += int(((a1 * a2) * a3) != (a1 * (a2 * a3)))
        inv += int(a1 * a1.inverse() != Character.identity(d, n, exact=True))
        dual += int(duality_defect(a1, a2) != 0)
        f = random_polynomial_form(rng, d, 1 + int(rng.integers(0, 2)), n + 0.5)
        x = [Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) for _ in range(d)]
        bc = max(bc, b_equals_c_defect(f, x, a1, a2))
    checks.append(Check("character_product_closure", closure == 0, closure, 0, f"{instances} random rational pairs"))
    checks.append(Check("associativity", assoc == 0, assoc, 0))
    checks.append(Check("inverse", inv == 0, inv, 0))
    checks.append(Check("gl_ck_duality", dual == 0, dual, 0))
    checks.append(Check("b_equals_c", bc == 0, float(bc), 0))
    return checks


# ---------------------------------------------------------------------------
# analysis


def smooth_fixture(d: int = 2, n: int = 1024, p: float = 2.0, seed: int = 7, amplitude: float = 0.5) -> BranchedRoughPath:
    t = np.linspace(0.0, 1.0, n + 1)
    return canonical_lift(t, smooth_path(t, d, seed, amplitude=amplitude), p=p)


def ito_fixture(d: int = 2, n: int = 1024, seed: int = 7, amplitude: float = 0.5) -> BranchedRoughPath:
    """Smooth driver with Ito-type corrections ``c_ii(t) = -t/2`` on every diagonal."""
    t = np.linspace(0.0, 1.0, n + 1)
    return ito_like_lift(t, smooth_path(t, d, seed, amplitude=amplitude), {(i, i): -t / 2 for i in range(1, d + 1)}, p=2.0)


def chen_defect(X: BranchedRoughPath, stride: int = 1) -> float:
    """Largest forest-level Chen defect over all triples of a (thinned) grid."""
    idx = np.arange(0, len(X), stride)
    b = X.basis
    worst = 0.0
    for a in range(len(idx)):
        for c in range(a + 1, len(idx)):
            mids = idx[a + 1 : c]
            if len(mids) == 0:
                continue
            s = np.full(len(mids), idx[a])
            t = np.full(len(mids), idx[c])
            lhs = b.product(X.increments(s, mids), X.increments(mids, t))
            rhs = X.increments(s, t)
            worst = max(worst, float(np.max(np.abs(b.forest_values(lhs) - b.forest_values(rhs)))))
    return worst


def character_defect(X: BranchedRoughPath, stride: int = 1) -> float:
    """Independent check of the character law: convolve forest maps of two increments."""
    idx = np.arange(0, len(X), stride)
    worst = 0.0
    for k in range(len(idx) - 2):
        a = Character(X.d, X.p_floor, X.increments(np.array([idx[k]]), np.array([idx[k + 1]]))[0]).forest_map()
        c = Character(X.d, X.p_floor, X.increments(np.array([idx[k + 1]]), np.array([idx[k + 2]]))[0]).forest_map()
        conv = product_of_forest_maps(a, c, X.p_floor)
        worst = max(worst, _character_gap(conv))
    return worst


def _character_gap(fmap: dict) -> float:
    worst = 0.0
    for rho, v in fmap.items():
        if len(rho.trees) > 1:
            prod = 1.0
            for t in rho.trees:
                prod *= fmap[as_forest(t)]
            worst = max(worst, abs(v - prod))
    return worst


def geometric_defect(X: BranchedRoughPath) -> float:
    """``|(X, .1)^2 - 2 (X, [.1]_1)|`` over the whole path; zero for geometric lifts."""
    inc = X.increment(X.times[0], X.times[-1])
    return abs(inc.evaluate("1") ** 2 - 2 * inc.evaluate("1(1)"))


SLOPE_LEVELS = range(3, 9)  # six dyadic scales, from 1/8 of the horizon down


def remainder_slopes(f: PolynomialOneForm, X: BranchedRoughPath, levels=SLOPE_LEVELS) -> tuple[float, float, list]:
    rows = local_error_report(f, X, levels)
    om = [r["omega"] for r in rows]
    return loglog_slope(om, [r["level1_remainder"] for r in rows]), loglog_slope(om, [r["remainder"] for r in rows]), rows


def chen_integral_defect(f: PolynomialOneForm, X: BranchedRoughPath, times) -> float:
    worst = 0.0
    by = basis(f.e, X.p_floor)
    for a in range(len(times)):
        for c in range(a + 2, len(times)):
            whole = by.forest_values(full_integral(f, X, times[a], times[c]).values)
            for m in range(a + 1, c):
                split = full_integral(f, X, times[a], times[m]) * full_integral(f, X, times[m], times[c])
                worst = max(worst, float(np.max(np.abs(by.forest_values(split.values) - whole))))
    return worst


def dilation_ratios(f: PolynomialOneForm, X: BranchedRoughPath, lams=(1, 1 / 2, 1 / 4, 1 / 8, 1 / 16), max_points: int = 65) -> list:
    """``||Y||_pvar / (||f||_Lip (||X|| v ||X||^p))`` along the dilation family of ``X``."""
    x = X.level1()
    box = np.stack([x.min(axis=0), x.max(axis=0)], axis=1)
    lip = f.lip_norm_estimate(f.gamma - 1, box)
    out = []
    for lam in lams:
        Xl = X.dilate(lam)
        Y = integral_path(f, Xl)
        xn = p_variation(Xl, max_points=max_points)
        yn = p_variation(Y, max_points=max_points)
        out.append(yn / (lip * max(xn, xn**X.p)))
    return out


def continuity_sequence(f: PolynomialOneForm, t, x, p: float, eps0: float, steps: int = 6, max_points: int = 65) -> tuple[list, list]:
    """``d_p(X^n, X)`` and ``d_p(Y^n, Y)`` for Ito-type perturbations of rate ``eps0 4^-n``.

    The perturbation sits on a degree-two component, so ``d_p(X^n, X)`` scales
    like the square root of its rate and halves from one step to the next.
    """
    X = canonical_lift(t, x, p=p)
    Y = integral_path(f, X)
    dx, dy = [], []
    for k in range(steps + 1):
        Xn = ito_like_lift(t, x, {(1, 1): eps0 * 4.0**-k * (t - t[0])}, p=p)
        dx.append(dp_metric(Xn, X, max_points=max_points))
        dy.append(dp_metric(integral_path(f, Xn), Y, max_points=max_points))
    return dx, dy


def analysis_suite(seed: int = 0, n: int = 1024) -> list:
    checks = []
    X = smooth_fixture(n=n, seed=7 + seed)
    Xi = ito_fixture(n=n, seed=7 + seed)
    for name, path in (("canonical", X), ("ito", Xi)):
        coarse = BranchedRoughPath(path.times[::32], path.values[::32], path.p, path.d)
        dc = chen_defect(coarse)
        checks.append(Check(f"chen_{name}_lift", dc <= 1e-8, dc, 1e-8))
        dk = character_defect(coarse)
        checks.append(Check(f"character_{name}_lift", dk <= 1e-8, dk, 1e-8))
    g = geometric_defect(Xi)
    checks.append(Check("ito_lift_not_geometric", g > 1e-3, g, 1e-3, "|(X,1)^2 - 2(X,1(1))| must be visibly non-zero"))

    t = np.linspace(0.0, 1.0, 257)
    X1 = canonical_lift(t, t[:, None], p=1.0)
    val = float(integrate_one_form(lifted_one_form(identity_form(1, 1.5), X1), X1, 0.0, 1.0).value[0])
    checks.append(Check("young_level1", abs(val - 0.5) <= 1e-6, abs(val - 0.5), 1e-6, "int_0^1 t dt"))
    X2 = canonical_lift(t, t[:, None], p=2.0)
    tree = float(full_integral(constant_form(1, 1, 2.5), X2, 0.0, 1.0).evaluate("1(1)"))
    checks.append(Check("young_tree_component", abs(tree - 0.5) <= 1e-6, abs(tree - 0.5), 1e-6, "(Y,1(1)) for f = 1"))

    for p, gamma in ((2.0, 2.5), (1.5, 2.0)):
        f = rotation_form(gamma)
        Xp = smooth_fixture(n=2 * n, p=p, seed=7 + seed)
        s1, s2, _ = remainder_slopes(f, Xp)
        th = theta(p, gamma)
        checks.append(Check(f"level1_remainder_slope_p{p}_g{gamma}", s1 >= th - 0.1, s1, th - 0.1))
        checks.append(Check(f"local_approx_slope_p{p}_g{gamma}", s2 >= gamma / p - 0.1, s2, gamma / p - 0.1))

    f = rotation_form(2.5)
    ch = chen_integral_defect(f, X, X.times[:: n // 4])
    checks.append(Check("chen_integral", ch <= 1e-6, ch, 1e-6))

    ratios = dilation_ratios(f, X)
    med = statistics.median(ratios)
    spread = max(max(ratios) / med, med / min(ratios))
    checks.append(Check("pvar_bound_ratio_spread", spread <= 2.0, spread, 2.0, f"ratios {['%.3g' % r for r in ratios]}"))

    x = smooth_path(X.times[::4], 2, 7 + seed, amplitude=0.5)
    dx, dy = continuity_sequence(f, X.times[::4], x, 2.0, 1e-3)
    halving = max(abs(b / a - 0.5) for a, b in zip(dx, dx[1:]))
    checks.append(Check("dp_input_halving", halving <= 0.05, halving, 0.05, "max |ratio - 1/2|"))
    mono = all(b <= a * (1 + 1e-9) for a, b in zip(dy, dy[1:]))
    checks.append(Check("dp_output_nonincreasing", mono, float(max(b - a for a, b in zip(dy, dy[1:]))), 0.0))
    checks.append(Check("dp_output_small", dy[-1] < 1e-3, dy[-1], 1e-3))
    return checks


# ---------------------------------------------------------------------------
# pi


def generator_suite() -> list:
    checks = []
    for d, n, k in ((1, 1, 1), (1, 2, 2), (2, 2, 5)):
        g = compute_generators(d, n)
        checks.append(Check(f"generator_count_d{d}_p{n}", g.K == k, g.K, k))
    for d in (1, 2):
        rep = []
        compute_generators(d, 3, rep)
        r = rep[-1]
        ok = len(r.new_generators) == r.dim - r.product_rank and r.product_rank == r.n_products
        checks.append(Check(f"generator_rank_identity_d{d}_deg3", ok, len(r.new_generators), r.dim - r.product_rank))
    return checks


def pi_suite(X: BranchedRoughPath | None = None, f: PolynomialOneForm | None = None, n: int = 1024, seed: int = 0) -> list:
    checks = generator_suite()
    cases = [("configured", X, f)] if X is not None else [("canonical", smooth_fixture(n=n, seed=7 + seed), None), ("ito", ito_fixture(n=n, seed=7 + seed), None)]
    for name, path, form in cases:
        form = rotation_form(path.p + 0.5) if form is None else form
        c = compare_first_levels(form, path, path.times[0], path.times[-1])
        checks.append(Check(f"first_level_gap_{name}", c.gap <= 1e-4, c.gap, 1e-4))
        checks.append(Check(f"shuffle_{name}", c.shuffle_defect <= 1e-8, c.shuffle_defect, 1e-8))
        passed, value, detail = taylor_rate(c.taylor_residuals, c.omegas, theta(path.p, form.gamma))
        checks.append(Check(f"taylor_residual_{name}", passed, value, theta(path.p, form.gamma) - 0.1, detail))
    return checks


ROUNDOFF = 1e-12


def taylor_rate(residuals, omegas, th: float) -> tuple[bool, float, str]:
    """Decay of the termwise Taylor residual: either at roundoff or fitted slope >= theta - 0.1."""
    scale = max(1.0, max(omegas))
    if max(residuals) <= ROUNDOFF * scale:
        return True, float("inf"), f"residual at roundoff ({max(residuals):.2e})"
    slope = loglog_slope(omegas, [max(r, 1e-300) for r in residuals])
    return slope >= th - 0.1, slope, f"fitted slope {slope:.3f}"


def run_suite(name: str, **kwargs) -> list:
    if name == "algebra":
        return algebra_suite(**{k: v for k, v in kwargs.items() if k in ("d", "n", "instances", "seed")})
    if name == "analysis":
        return analysis_suite(**{k: v for k, v in kwargs.items() if k in ("seed", "n")})
    if name == "pi":
        return pi_suite(**{k: v for k, v in kwargs.items() if k in ("X", "f", "n", "seed")})
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")

"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the summary) or
directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import statistics
import subprocess
import sys
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from oracles import b_and_c, brute_coproduct, brute_gl_product, brute_product, forest_values, sigma  # noqa: E402

from branched_rough.character_group import Character, is_character  # noqa: E402
from branched_rough.effect_integrator import full_integral, integrate_one_form, lifted_one_form, theta  # noqa: E402
from branched_rough.fixtures import (  # noqa: E402
    build_path,
    constant_form,
    identity_form,
    random_polynomial_form,
    rotation_form,
    smooth_path,
)
from branched_rough.forest_algebra import EMPTY, as_forest, coproduct, enumerate_forests, graft_onto, graft_root  # noqa: E402
from branched_rough.pi_correspondence import compare_first_levels, compute_generators  # noqa: E402
from branched_rough.rough_path import canonical_lift  # noqa: E402
from branched_rough.verification import (  # noqa: E402
    chen_integral_defect,
    continuity_sequence,
    dilation_ratios,
    ito_fixture,
    remainder_slopes,
    smooth_fixture,
    taylor_rate,
)

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "demos" / "configs"
LINES: list[str] = []


def record(number: int, title: str, passed: bool, detail: str) -> bool:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}: {detail}"
    LINES.append(line)
    print(line)
    return passed


def _counter(terms) -> Counter:
    out = Counter()
    for left, right, m in terms:
        out[(left, right)] += m
    return out


# ---------------------------------------------------------------------------
# 1. algebra exactness


def algebra_exactness(instances: int = 100, seed: int = 0) -> tuple[bool, str]:
    d, n = 2, 3
    forests = enumerate_forests(d, n)
    failures = Counter()

    for rho in forests:
        lhs, rhs = Counter(), Counter()
        for left, right, m in coproduct(rho):
            for ll, lr, m2 in coproduct(left):
                lhs[(ll, lr, right)] += m * m2
            for rl, rr, m2 in coproduct(right):
                rhs[(left, rl, rr)] += m * m2
        failures["coassociativity"] += int(+lhs != +rhs)

    for rho in [EMPTY] + [f for f in forests if f.degree < n]:
        for j in range(1, d + 1):
            tree = as_forest(graft_root(rho, j))
            expect = Counter({(tree, EMPTY): 1})
            for left, right, m in coproduct(rho):
                expect[(left, as_forest(graft_root(right, j)))] += m
            failures["grafted_root"] += int(brute_coproduct(tree) != expect)

    trees = [f for f in forests if f.is_tree]
    for rho in [EMPTY] + forests:
        for tau in trees:
            if rho.degree + tau.degree > n:
                continue
            g = as_forest(graft_onto(rho, tau.trees[0]))
            expect = Counter({(g, EMPTY): 1})
            for r1, r2, m1 in coproduct(rho):
                for t1, t2, m2 in coproduct(tau):
                    if t2 != EMPTY:
                        expect[(r1 * t1, as_forest(graft_onto(r2, t2.trees[0])))] += m1 * m2
            failures["graft_onto"] += int(brute_coproduct(g) != expect)

    gl = {}
    for r1 in [EMPTY] + forests:
        for r2 in [EMPTY] + forests:
            if 0 < r1.degree + r2.degree <= n:
                gl[(r1, r2)] = brute_gl_product(r1, r2)

    rng = np.random.default_rng(seed)
    for _ in range(instances):
        a = Character.random(d, n, rng, exact=True)
        b = Character.random(d, n, rng, exact=True)
        ab = forest_values(a * b)
        brute = brute_product(a, b)
        failures["closure"] += int(not is_character(ab) or any(ab[rho] != v for rho, v in brute.items()))

        fa, fb = forest_values(a), forest_values(b)
        acc = {tau: Fraction(0) for tau in forests}
        for (r1, r2), prod in gl.items():
            for tau, m in prod.items():
                acc[tau] += Fraction(sigma(tau), sigma(r1) * sigma(r2)) * m * fa[r1] * fb[r2]
        failures["duality"] += int(any(acc[tau] != ab[tau] for tau in forests))

        f = random_polynomial_form(rng, d, 1 + int(rng.integers(0, 2)), n + 0.5)
        x = [Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) for _ in range(d)]
        B, C = b_and_c(f, x, a, b)
        failures["b_equals_c"] += int(B != C)

    total = sum(failures.values())
    detail = ", ".join(f"{k}={v}" for k, v in failures.items())
    return total == 0, f"{instances} rational instances, d=2, degree<=3; mismatches: {detail}"


# ---------------------------------------------------------------------------
# 2. lift validity


def _shipped_lifts() -> list:
    import json

    out = []
    for name in ("smooth_integrate.json", "ito_pi.json", "linear_young.json", "metrics.json"):
        cfg = json.loads((CONFIGS / name).read_text())
        out.append((name, build_path(cfg, cfg.get("seed"), CONFIGS)))
        if "path2" in cfg:
            out.append((name + ":2", build_path(cfg, cfg.get("seed"), CONFIGS, "path2", "lift2")))
    t = np.array([0.0, 0.5, 1.0])
    out.append(("zigzag.csv", canonical_lift(t, np.array([[0, 0], [1, 0.25], [0, 1]]), p=2.0)))
    out.append(("smooth_fixture", smooth_fixture()))
    out.append(("ito_fixture", ito_fixture()))
    return out


def _chen_all_triples(X, max_points: int = 65) -> float:
    """Every triple of a thinned grid, plus random triples of the full grid."""
    stride = max(1, int(np.ceil((len(X) - 1) / (max_points - 1))))
    idx = np.unique(np.concatenate([np.arange(0, len(X), stride), [len(X) - 1]]))
    b = X.basis
    worst = 0.0
    for a in range(len(idx)):
        for c in range(a + 2, len(idx)):
            mids = idx[a + 1 : c]
            s, t = np.full(len(mids), idx[a]), np.full(len(mids), idx[c])
            lhs = b.forest_values(b.product(X.increments(s, mids), X.increments(mids, t)))
            worst = max(worst, float(np.max(np.abs(lhs - b.forest_values(X.increments(s, t))))))
    # random triples drawn from the full grid
    rng = np.random.default_rng(len(X))
    s, u, t = np.sort(rng.integers(0, len(X), size=(3, 20000)), axis=0)
    lhs = b.forest_values(b.product(X.increments(s, u), X.increments(u, t)))
    return max(worst, float(np.max(np.abs(lhs - b.forest_values(X.increments(s, t))))))


def _character_worst(X) -> float:
    """Convolve forest maps of neighbouring increments through enumerated cuts; check multiplicativity."""
    worst = 0.0
    n = X.p_floor
    idx = np.linspace(0, len(X) - 1, min(len(X), 9)).astype(int)
    for k in range(len(idx) - 2):
        a = Character(X.d, n, X.increments(np.array([idx[k]]), np.array([idx[k + 1]]))[0])
        c = Character(X.d, n, X.increments(np.array([idx[k + 1]]), np.array([idx[k + 2]]))[0])
        fa, fc = a.forest_map(), c.forest_map()
        conv = {EMPTY: 1.0}
        for rho in enumerate_forests(X.d, n):
            conv[rho] = sum(m * fa[l] * fc[r] for (l, r), m in brute_coproduct(rho).items())
        for rho, v in conv.items():
            if len(rho.trees) > 1:
                worst = max(worst, abs(v - float(np.prod([conv[as_forest(t)] for t in rho.trees]))))
    return worst


def lift_validity() -> tuple[bool, str]:
    worst_chen = worst_char = 0.0
    for _, X in _shipped_lifts():
        worst_chen = max(worst_chen, _chen_all_triples(X))
        worst_char = max(worst_char, _character_worst(X))
    Xi = ito_fixture()
    inc = Xi.increment(Xi.times[0], Xi.times[-1])
    geo = abs(inc.evaluate("1") ** 2 - 2 * inc.evaluate("1(1)"))
    ok = worst_chen <= 1e-8 and worst_char <= 1e-8 and geo > 1e-3
    return ok, f"Chen {worst_chen:.1e}, character {worst_char:.1e} (<=1e-8); Ito |(X,1)^2-2(X,1(1))| = {geo:.3f} (>1e-3)"


# ---------------------------------------------------------------------------
# 3. Young sanity


def young_sanity() -> tuple[bool, str]:
    t = np.linspace(0.0, 1.0, 257)
    errs = []
    for p in (1.0, 1.5):
        X = canonical_lift(t, t[:, None], p=p)
        val = integrate_one_form(lifted_one_form(identity_form(1, p + 0.5), X), X, 0.0, 1.0).value[0]
        errs.append(abs(val - 0.5))
    X2 = canonical_lift(t, t[:, None], p=2.0)
    tree = full_integral(constant_form(1, 1, 2.5), X2, 0.0, 1.0).evaluate("1(1)")
    tree_err = abs(float(tree) - 0.5)
    ok = max(errs) <= 1e-6 and tree_err <= 1e-6
    return ok, f"|int t dt - 1/2| = {max(errs):.1e} (p=1, 1.5); |(Y,1(1)) - 1/2| = {tree_err:.1e} (f=1, p=2)"


# ---------------------------------------------------------------------------
# 4. remainder exponents


def remainder_exponents() -> tuple[bool, str]:
    ok = True
    parts = []
    for p, gamma in ((2.0, 2.5), (1.5, 2.0)):
        s1, s2, _ = remainder_slopes(rotation_form(gamma), smooth_fixture(n=2048, p=p))
        th = theta(p, gamma)
        ok &= s1 >= th - 0.1 and s2 >= gamma / p - 0.1
        parts.append(f"(p,g)=({p},{gamma}): level-1 slope {s1:.3f} >= {th - 0.1:.3f}, approximant slope {s2:.3f} >= {gamma / p - 0.1:.3f}")
    return ok, "; ".join(parts)


# ---------------------------------------------------------------------------
# 5. Chen for the integral


def integral_chen() -> tuple[bool, str]:
    f = rotation_form(2.5)
    worst = 0.0
    for X in (smooth_fixture(), ito_fixture()):
        worst = max(worst, chen_integral_defect(f, X, X.times[:: (len(X) - 1) // 4]))
    return worst <= 1e-6, f"worst per-forest defect {worst:.2e} (<=1e-6) over all triples of 5 grid times, canonical and Ito"


# ---------------------------------------------------------------------------
# 6. bound along dilations


def dilation_bound() -> tuple[bool, str]:
    ratios = dilation_ratios(rotation_form(2.5), smooth_fixture())
    med = statistics.median(ratios)
    spread = max(max(ratios) / med, med / min(ratios))
    return spread <= 2.0, f"ratios {', '.join(f'{r:.3f}' for r in ratios)}; max deviation factor {spread:.3f} (<=2)"


# ---------------------------------------------------------------------------
# 7. d_p continuity


def dp_continuity() -> tuple[bool, str]:
    X = smooth_fixture()
    t = X.times[::4]
    dx, dy = continuity_sequence(rotation_form(2.5), t, smooth_path(t, 2, 7, amplitude=0.5), 2.0, 1e-3)
    halving = max(abs(b / a - 0.5) for a, b in zip(dx, dx[1:]))
    mono = all(b <= a for a, b in zip(dy, dy[1:]))
    ok = halving <= 0.05 and mono and dy[-1] < 1e-3
    return ok, f"d_p(X^n,X) ratios within {halving:.1e} of 1/2; d_p(Y^n,Y) nonincreasing={mono}, final {dy[-1]:.2e} (<1e-3)"


# ---------------------------------------------------------------------------
# 8. first-level coincidence


def first_level_coincidence() -> tuple[bool, str]:
    ok = True
    parts = []
    for name, X in (("canonical", smooth_fixture()), ("ito", ito_fixture())):
        f = rotation_form(2.5)
        c = compare_first_levels(f, X, X.times[0], X.times[-1])
        rate_ok, _, rate_detail = taylor_rate(c.taylor_residuals, c.omegas, theta(X.p, f.gamma))
        ok &= c.gap <= 1e-4 and rate_ok
        parts.append(f"{name}: gap {c.gap:.1e} (<=1e-4), Taylor {rate_detail}")
    return ok, "; ".join(parts)


# ---------------------------------------------------------------------------
# 9. generators


def generators() -> tuple[bool, str]:
    ok = True
    counts = []
    for d, n, k in ((1, 1, 1), (1, 2, 2), (2, 2, 5)):
        K = compute_generators(d, n).K
        ok &= K == k
        counts.append(f"K(d={d},[p]={n})={K}")
    ranks = []
    for d in (1, 2):
        report = []
        compute_generators(d, 3, report)
        top = report[-1]
        ok &= top.product_rank == top.n_products and len(top.new_generators) == top.dim - top.product_rank
        ranks.append(f"d={d}: dim {top.dim} = rank {top.product_rank} + {len(top.new_generators)} new")
    return ok, ", ".join(counts) + "; degree 3 " + ", ".join(ranks)


# ---------------------------------------------------------------------------
# 10. CLI determinism


def cli_determinism() -> tuple[bool, str]:
    runs = [
        ["lift", "--config", str(CONFIGS / "smooth_integrate.json"), "--seed", "11"],
        ["integrate", "--config", str(CONFIGS / "smooth_integrate.json"), "--seed", "11"],
        ["verify", "--config", str(CONFIGS / "ito_pi.json"), "--seed", "5"],
        ["metrics", "--config", str(CONFIGS / "metrics.json"), "--seed", "3"],
    ]
    same = []
    for argv in runs:
        outs = [subprocess.run([sys.executable, "-m", "branched_rough", *argv], capture_output=True, check=False).stdout for _ in range(2)]
        same.append(outs[0] == outs[1] and len(outs[0]) > 0)
    return all(same), ", ".join(f"{argv[0]}={'identical' if s else 'DIFFERENT'}" for argv, s in zip(runs, same))


CRITERIA = [
    (1, "algebra exactness", algebra_exactness),
    (2, "lift validity", lift_validity),
    (3, "Young sanity", young_sanity),
    (4, "remainder exponents", remainder_exponents),
    (5, "Chen identity of the integral", integral_chen),
    (6, "bound along dilations", dilation_bound),
    (7, "d_p continuity", dp_continuity),
    (8, "first-level coincidence", first_level_coincidence),
    (9, "generators", generators),
    (10, "CLI determinism", cli_determinism),
]


def _run(number: int) -> bool:
    _, title, fn = CRITERIA[number - 1]
    start = time.perf_counter()
    passed, detail = fn()
    return record(number, title, passed, f"{detail} [{time.perf_counter() - start:.1f}s]")


def test_criterion_01_algebra_exactness():
    assert _run(1)


def test_criterion_02_lift_validity():
    assert _run(2)


def test_criterion_03_young_sanity():
    assert _run(3)


def test_criterion_04_remainder_exponents():
    assert _run(4)


def test_criterion_05_integral_chen():
    assert _run(5)


def test_criterion_06_dilation_bound():
    assert _run(6)


def test_criterion_07_dp_continuity():
    assert _run(7)


def test_criterion_08_first_level_coincidence():
    assert _run(8)


def test_criterion_09_generators():
    assert _run(9)


def test_criterion_10_cli_determinism():
    assert _run(10)


if __name__ == "__main__":
    results = [_run(k) for k in range(1, len(CRITERIA) + 1)]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)

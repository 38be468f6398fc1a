"""Integrate the identity against t on [0, 1], then compare canonical and Ito-type lifts of the same path."""

import numpy as np

from branched_rough import canonical_lift, full_integral, integrate_one_form, ito_like_lift
from branched_rough.effect_integrator import lifted_one_form
from branched_rough.fixtures import constant_form, identity_form, smooth_path

t = np.linspace(0.0, 1.0, 257)
for p in (1.0, 1.5):
    X = canonical_lift(t, t[:, None], p=p)
    res = integrate_one_form(lifted_one_form(identity_form(1, p + 0.5), X), X, 0.0, 1.0)
    print(f"p={p}: integral of t dt = {res.value[0]:.12f} (exact 1/2)")

X = canonical_lift(t, t[:, None], p=2.0)
Y = full_integral(constant_form(1, 1, 2.5), X, 0.0, 1.0)
print(f"tree component <Y, 1(1)> of the integral of dt = {Y.evaluate('1(1)'):.12f} (exact 1/2)")

x = smooth_path(t, 2, seed=7, amplitude=0.5)  # a closed loop: x(1) = x(0)
canon = canonical_lift(t, x, p=2.0)
ito = ito_like_lift(t, x, {(1, 1): -t / 2, (2, 2): -t / 2})
f = identity_form(2, 2.5)
for name, Z in (("canonical", canon), ("Ito-type", ito)):
    inc = Z.increment(0.0, 1.0)
    geo = inc.evaluate("1") ** 2 - 2 * inc.evaluate("1(1)")
    val = full_integral(f, Z, 0.0, 1.0).evaluate("1")
    print(f"{name:>9}: (X,1)^2 - 2(X,1(1)) = {geo:+.6f}   first component of the integral of x dx = {val:+.6f}")
print("The Ito-type value differs from the canonical one by the bracket correction -1/2.")

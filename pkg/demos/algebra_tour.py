"""Walk through labelled forests, the cut coproduct, the grafting product and characters."""

import numpy as np

from branched_rough import Character, coproduct, encode, enumerate_forests, gl_product, graft_onto, graft_root, parse, symmetry_factor

print("Forests over labels {1, 2} up to degree 2:")
print("  " + ", ".join(encode(f) for f in enumerate_forests(2, 2)))

tau = parse("1(1 2)")
print(f"\nThe tree {encode(tau)} has symmetry factor {symmetry_factor(tau)}; 1(1 1) has {symmetry_factor(parse('1(1 1)'))}.")

print(f"\nAdmissible cuts of {encode(tau)} (pruned part on the left, trunk on the right):")
for left, right, m in coproduct(tau):
    print(f"  {m} x [{encode(left) or '1'}] (x) [{encode(right) or '1'}]")

print("\nGrafting:")
print(f"  [1 2]_1      = {encode(graft_root(parse('1 2'), 1))}")
print(f"  1 grafted onto 2(1) = {encode(graft_onto(parse('1'), '2(1)'))}")
print(f"  1 * 2(1) in the grafting algebra = {gl_product(parse('1'), parse('2(1)'))}")

rng = np.random.default_rng(1)
a = Character.random(2, 3, rng, exact=True)
b = Character.random(2, 3, rng, exact=True)
ab = a * b
print("\nTwo random rational characters of degree 3 and their product:")
for name in ("1", "1(2)", "1 2", "1(2(1))"):
    print(f"  <a,{name}> = {a.evaluate(name)}   <b,{name}> = {b.evaluate(name)}   <ab,{name}> = {ab.evaluate(name)}")
print(f"  a * a^-1 is the identity: {(a * a.inverse()).tree_values == Character.identity(2, 3, exact=True).tree_values}")

"""Local remainders of the rough integral shrink like a power of the control; print the fitted slopes."""

from branched_rough.effect_integrator import local_error_report, loglog_slope, theta
from branched_rough.fixtures import rotation_form
from branched_rough.verification import SLOPE_LEVELS, smooth_fixture

for p, gamma in ((2.0, 2.5), (1.5, 2.0)):
    X = smooth_fixture(n=2048, p=p)
    rows = local_error_report(rotation_form(gamma), X, levels=SLOPE_LEVELS)
    print(f"p={p}, gamma={gamma}, predicted exponent {theta(p, gamma):.3f}")
    print(f"  {'scale':>10} {'omega':>10} {'level-1':>10} {'local':>10}")
    for r in rows:
        print(f"  {r['scale']:10.3e} {r['omega']:10.3e} {r['level1_remainder']:10.3e} {r['remainder']:10.3e}")
    om = [r["omega"] for r in rows]
    print(f"  fitted slopes: level-1 {loglog_slope(om, [r['level1_remainder'] for r in rows]):.3f}, "
          f"local {loglog_slope(om, [r['remainder'] for r in rows]):.3f}\n")

"""Which drifts admit the machinery? Check the sign-change / bracket
condition for a few choices of beta and map out the drift regions."""

import dataclasses

from harnack_lab import (
    CylinderDomain,
    OperatorSpec,
    check_hypothesis,
    classify_regions,
    smallest_passing_order,
)

dom = CylinderDomain()                                  # |y| < 2, inner box [0,1] x B_1
ball3 = dataclasses.replace(dom, y_outer_radius=3.0)

candidates = [
    ("y1", 2, dom),          # the Kolmogorov drift: changes sign through 0
    ("y1^2", 2, dom),        # nonnegative, never crosses zero
    ("sin(y1)", 3, ball3),   # crosses zero at 0 and +-pi inside B_3
    ("y1*y2", 3, dom),       # sign change along the axes
    ("1", 2, dom),           # constant drift, no sign change
]

print("drift          dim  passed  sign change  r  derivative mass")
for beta, dim_n, d in candidates:
    op = OperatorSpec.from_strings(beta, "0", dim_n=dim_n)
    rep = check_hypothesis(op, d, grid_step=0.05)
    print(f"{beta:<14} {dim_n:>3}  {str(rep.passed):<6}  {str(rep.sign_change_ok):<11} "
          f"{rep.order_used}  {rep.min_derivative_mass:.4g}")

# smallest derivative order that certifies the bracket condition
op = OperatorSpec.from_strings("y1", "0")
r = smallest_passing_order(op, dom)
print(f"\nbeta = y1 already passes at derivative order r = {r}")

# where does the drift push right/left?  level sets at a few thresholds
print("\ndrift regions for beta = y1 on the inner ball (lattice point counts):")
for level in (0.275, 0.525, 0.875):
    regions = classify_regions(op, dom, level=level, grid_step=0.05)
    note = f"   [{regions.warning}]" if regions.warning else ""
    print(f"  level {level:>4.2f}:  A+ {regions.plus_count:>4}   "
          f"A- {regions.minus_count:>4}{note}")

"""Unit normal walkthrough: resolution, worst-case radius, the least-favorable pair
and the non-convex confidence region it induces.

Run: python demos/normal_family.py
"""

from robust_resolve.dro_set import confidence_region, region_radius
from robust_resolve.estimators import huber_from_alpha
from robust_resolve.families import LocationFamily
from robust_resolve.least_favorable import build_pair, resolution
from robust_resolve.numerics import Grid
from robust_resolve.radius import median_regime_radius, rbar, worst_case_radius

normal = LocationFamily.normal()
alpha = 0.1

# how fast can +-delta be told apart when an adversary moves 10% of the mass?
for delta in (0.5, 1.0, 2.0, 4.0):
    print(f"r^{alpha}({delta}) = {resolution(normal, delta, alpha):.5f}   (uncorrupted: {delta ** 2 / 2:.5f})")
print(f"the curve saturates at rbar({alpha}) = {rbar(alpha):.6f}\n")

# inverting the curve gives the smallest radius any estimator can certify
for r in (0.0, 0.05, 0.43, 0.9):
    k = worst_case_radius(normal, r, alpha)
    print(f"kappa(r={r}, alpha={alpha}) = {k.value:.4f}")
print(f"median regime (r = 0): {median_regime_radius(normal, alpha):.4f}\n")

# the least-favorable pair at delta = 2 and the Huber clip it implies
pair = build_pair(normal, 2.0, alpha)
phi = huber_from_alpha(normal, 2.0, alpha)
print(f"c' = {pair.c_prime:.5f}, Huber clip k = -log c' = {phi.k:.4f}, resolution = {pair.resolution:.5f}")

# its midpoint p_hat* is the observation with the widest confidence region
region = confidence_region(pair.p_hat_star, normal, 0.43, alpha, Grid(-4.0, 4.0, 321))
print("region at r = 0.43:", " u ".join(f"[{a:.3f}, {b:.3f}]" for a, b in region.intervals))
print(f"radius {region_radius(region):.3f}; note the gap around 0")

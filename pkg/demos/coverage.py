"""Monte-Carlo coverage: the tuned Huber interval decays exponentially under the
least-favorable adversary, the median holds at its bias, and the mean breaks down
under a single far cluster of outliers.

Run: python demos/coverage.py   (a few seconds)
"""

from robust_resolve.families import LocationFamily
from robust_resolve.radius import median_regime_radius
from robust_resolve.simulate import (CorruptionModel, HuberInterval, MeanInterval, MedianInterval,
                                     coverage_experiment, fit_slope)

normal = LocationFamily.normal()
alpha, ns = 0.1, [50, 100, 200, 400]

lf = CorruptionModel.least_favorable_minus(normal, 2.2, alpha)
reports = coverage_experiment(lf, HuberInterval(2.2, alpha), ns, trials=2000, seed=0)
for rep in reports:
    print(f"huber  n={rep.n:>3}  failure rate {rep.rate:.3e}  exponent {rep.exponent_estimate:.3f}")
print(f"log-rate slope {fit_slope(reports):.3f} (the resolution at delta = 2.2 is 0.4635)\n")

width = 2 * median_regime_radius(normal, alpha)
for rep in coverage_experiment(CorruptionModel.tail_shift(normal, alpha), MedianInterval(width), ns, 2000, 0):
    print(f"median n={rep.n:>3}  failures {rep.failures}/{rep.trials}")

outlier = CorruptionModel.mixture_outlier(normal, alpha, 1e4)
for rep in coverage_experiment(outlier, MeanInterval(3.0), ns, 2000, 0):
    print(f"mean   n={rep.n:>3}  failure rate {rep.rate:.3f}")

"""Minimal KL-TV robust confidence sets for location parameters.

Quick start::

    from robust_resolve import LocationFamily, worst_case_radius
    worst_case_radius(LocationFamily.normal(), r=0.43, alpha=0.1).value   # about 2.0
"""

__version__ = "0.1.0"

from .almost_sure import AlmostSureSolution, almost_sure_radius, almost_sure_resolution, rbar_prime
from .divergences import DiscreteDistribution, bhattacharyya_exponent, kl, tv
from .dro_set import ConfidenceRegion, confidence_region, dro_resolution, mixture_p_hat, region_radius
from .estimators import (EmpiricalSample, InfluenceFunction, OverlapWarning, PhiKind, confidence_interval,
                         estimate, huber_from_alpha, phi_eval)
from .exceptions import (DegenerateSample, DomainError, ExtrapolationError, GridMismatch, Infeasible,
                         IntegrandError, MonotonicityError, NoRoot, RobustResolveError, Unconverged)
from .families import Kind, Location, LocationFamily
from .least_favorable import OVERLAP, LeastFavorablePair, build_pair, resolution, resolution_curve, solve_c_prime
from .numerics import Grid, find_root, integrate, minimize_concave_on_polytope
from .phase import almost_sure_curve, phase_diagram
from .radius import (PhasePoint, Radius, Regime, classify, median_regime_radius, rbar, worst_case_radius)
from .simulate import (CorruptionModel, DroRegion, HuberInterval, MeanInterval, MedianInterval, TrialReport,
                       coverage_experiment, sample)

__all__ = [
    "AlmostSureSolution", "ConfidenceRegion", "CorruptionModel", "DegenerateSample", "DiscreteDistribution",
    "DomainError", "DroRegion", "EmpiricalSample", "ExtrapolationError", "Grid", "GridMismatch",
    "HuberInterval", "Infeasible", "InfluenceFunction", "IntegrandError", "Kind", "LeastFavorablePair",
    "Location", "LocationFamily", "MeanInterval", "MedianInterval", "MonotonicityError", "NoRoot", "OVERLAP",
    "OverlapWarning", "PhasePoint", "PhiKind", "Radius", "Regime", "RobustResolveError", "TrialReport",
    "Unconverged", "almost_sure_curve", "almost_sure_radius", "almost_sure_resolution", "bhattacharyya_exponent",
    "build_pair", "classify", "confidence_interval", "confidence_region", "coverage_experiment",
    "dro_resolution", "estimate", "find_root", "huber_from_alpha", "integrate", "kl",
    "median_regime_radius", "minimize_concave_on_polytope", "mixture_p_hat", "phase_diagram", "phi_eval",
    "rbar", "rbar_prime", "region_radius", "resolution", "resolution_curve", "sample", "solve_c_prime", "tv",
    "worst_case_radius",
]

"""Polyline curves and curve collections in R^d: annulus crossings, the
Frechet and bottleneck collection metrics, net skeletons, consistent
coupling, and Monte-Carlo tightness diagnostics."""

from .collection import CurveCollection, TrivialCurveError, brute_force_collection_distance, collection_distance
from .coupling import DiscreteMeasure, build_coding, convergence_diagnostic, coupled_marginal, sample_coupled
from .crossings import CrossingReport, count_crossings, find_crossings, separating_times, stability_radius
from .curve_metric import MetricResult, curve_distance, discrete_frechet, frechet_decision
from .diagnostics import estimate_tail, fit_power, locate_hotspot, rate_check, regularity_report
from .ensembles import EnsembleSpec, draw
from .geometry import AlignedFace, Annulus, Polyline, diameter
from .nets import DensityViolation, Net, coarsen_collection, greedy_net, grid_net, skeletonize

__all__ = [
    "AlignedFace", "Annulus", "CrossingReport", "CurveCollection", "DensityViolation", "DiscreteMeasure",
    "EnsembleSpec", "MetricResult", "Net", "Polyline", "TrivialCurveError", "brute_force_collection_distance",
    "build_coding", "coarsen_collection", "collection_distance", "convergence_diagnostic", "count_crossings",
    "coupled_marginal", "curve_distance", "diameter", "discrete_frechet", "draw", "estimate_tail",
    "find_crossings", "fit_power", "frechet_decision", "greedy_net", "grid_net", "locate_hotspot",
    "rate_check", "regularity_report", "sample_coupled", "separating_times", "skeletonize",
    "stability_radius",
]

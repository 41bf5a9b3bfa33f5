"""canard-lab: slow divergence integrals, entry-exit relations and density
transport for planar slow-fast Lienard systems dx/dt = y - f(x),
dy/dt = eps*(lam - p(x))."""

from . import errors
from ._expr import RealExpr, parse_expression
from .measures import (
    EmpiricalSample,
    TransportMeasure,
    cdf,
    histogram,
    ks_distance,
    make_entry,
    pushforward_density,
    pushforward_measure,
    sample,
)
from .model import AssumptionReport, LienardSystem, detect_orders, validate
from .relation import (
    MeasureClass,
    SlowRelation,
    buffer_point,
    classify_invariant_measures,
    cyclicity_report,
    find_zeros,
)
from .sdi import ATTRACTING, REPELLING, SdiEvaluator
from .sim import (
    CrossingResult,
    EnsembleRun,
    SimConfig,
    default_sections,
    ensemble_transport,
    find_control_lambda,
    integrate_to_section,
    transition_map,
)

__version__ = "0.1.0"

__all__ = [
    "ATTRACTING",
    "AssumptionReport",
    "CrossingResult",
    "EmpiricalSample",
    "EnsembleRun",
    "LienardSystem",
    "MeasureClass",
    "REPELLING",
    "RealExpr",
    "SdiEvaluator",
    "SimConfig",
    "SlowRelation",
    "TransportMeasure",
    "buffer_point",
    "cdf",
    "classify_invariant_measures",
    "cyclicity_report",
    "default_sections",
    "detect_orders",
    "ensemble_transport",
    "errors",
    "find_control_lambda",
    "find_zeros",
    "histogram",
    "integrate_to_section",
    "ks_distance",
    "make_entry",
    "parse_expression",
    "pushforward_density",
    "pushforward_measure",
    "sample",
    "transition_map",
    "validate",
]

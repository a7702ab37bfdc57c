"""Nonautonomous bistable Nagumo dynamics with a two-valued step weight.

Typical use::

    from nagumo_sap import StepProfile, analyze, realize_finite, connect
"""

from .connections import connect
from .errors import NagumoError, NumericalFailure, ValidationError
from .flow import ConstantProfile, StepProfile, Trajectory, count_turns, integrate
from .itinerary import Itinerary, analyze, periodic_solution, realize_finite, validate
from .phase_core import SystemParams, classify_level, critical_levels, potential
from .stretch import Thresholds, eps_star, run_relation, standard_relations, verify_stretch

__version__ = "0.1.0"

__all__ = [
    "ConstantProfile", "Itinerary", "NagumoError", "NumericalFailure", "StepProfile", "SystemParams",
    "Thresholds", "Trajectory", "ValidationError", "analyze", "classify_level", "connect", "count_turns",
    "critical_levels", "eps_star", "integrate", "periodic_solution", "potential", "realize_finite",
    "run_relation", "standard_relations", "validate", "verify_stretch",
]

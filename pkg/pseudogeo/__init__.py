"""pseudogeo: geodesics of two-dimensional pseudo-Riemannian metrics, parabolic points included."""

from .catalog import CatalogEntry, check_facts, list_entries, lookup
from .errors import GeodesicError
from .flow import (
    GeodesicPath,
    IntegrationOptions,
    PhaseState,
    StopReason,
    integrate_desingularized,
    integrate_natural,
    shoot_from_parabolic,
    shoot_from_regular,
    shoot_from_singular_line,
)
from .lift import JetPoint, admissible_directions, integrate_unparametrized
from .metric import CurveType, Direction, MetricField, PointKind, Symmetry, signature_at
from .symmetry import EnergyLevel, classify_family, h_of_launch, turning_analysis

__all__ = [
    "CatalogEntry", "CurveType", "Direction", "EnergyLevel", "GeodesicError", "GeodesicPath",
    "IntegrationOptions", "JetPoint", "MetricField", "PhaseState", "PointKind", "StopReason",
    "Symmetry", "admissible_directions", "check_facts", "classify_family", "h_of_launch",
    "integrate_desingularized", "integrate_natural", "integrate_unparametrized", "list_entries",
    "lookup", "shoot_from_parabolic", "shoot_from_regular", "shoot_from_singular_line",
    "signature_at", "turning_analysis",
]

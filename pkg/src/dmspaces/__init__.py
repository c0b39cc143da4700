"""Finite distance measure spaces and the GHLP distance toolkit."""

from __future__ import annotations

from .core import (
    INFINITY,
    ComponentPartition,
    FiniteDistanceMeasureSpace,
    InvalidSpaceError,
    StructureError,
    ValidationReport,
    components,
    make_log_halfline,
    make_space,
    neighborhood,
    sat_add,
    scale_measure,
    validate_space,
)

__all__ = [
    "INFINITY",
    "ComponentPartition",
    "FiniteDistanceMeasureSpace",
    "InvalidSpaceError",
    "StructureError",
    "ValidationReport",
    "components",
    "make_log_halfline",
    "make_space",
    "neighborhood",
    "sat_add",
    "scale_measure",
    "validate_space",
]

__version__ = "0.1.0"

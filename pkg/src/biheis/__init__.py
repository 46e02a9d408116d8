"""Numerical laboratory for the bi-Heisenberg group."""

from .geometry import (
    Case,
    Covector,
    ORIGIN,
    Point5,
    StructureParams,
    canonicalize,
    dilate,
    frame_at,
    group_multiply,
)

__all__ = [
    "Case",
    "Covector",
    "ORIGIN",
    "Point5",
    "StructureParams",
    "canonicalize",
    "dilate",
    "frame_at",
    "group_multiply",
]

__version__ = "0.1.0"

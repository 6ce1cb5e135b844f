"""Exponentially small splitting estimates for cubic frequency vectors."""

__version__ = "0.1.0"

from .field import CubicField, FieldElement, golden_field
from .koch import KochData, principal_koch

__all__ = ["CubicField", "FieldElement", "KochData", "golden_field", "principal_koch", "__version__"]

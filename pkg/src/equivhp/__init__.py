"""Exact equivariant periodic cyclic homology for finite groupoids."""

from .exact import ExactnessError, QMat
from .groupoid import FiniteGroupoid, GroupoidError, validate_groupoid

__all__ = ["ExactnessError", "QMat", "FiniteGroupoid", "GroupoidError", "validate_groupoid"]
__version__ = "0.1.0"

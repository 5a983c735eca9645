"""Numerical laboratory for concentration of norms on high-dimensional spaces."""

__version__ = "0.1.0"

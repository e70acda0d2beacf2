"""Numerical laboratory for bilinear multipliers of S_{0,0} type."""

__version__ = "0.1.0"

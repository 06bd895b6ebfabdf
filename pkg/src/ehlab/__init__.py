"""Numerical companions to the reduction of nonresidue bounds to levels of distribution."""

__version__ = "0.1.0"

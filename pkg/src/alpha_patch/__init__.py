"""Numerical laboratory for the one-dimensional alpha-patch transport model."""

__version__ = "0.1.0"

"""Numerical laboratory for frequency-restricted estimates and nonlinear smoothing."""
__version__ = "0.1.0"

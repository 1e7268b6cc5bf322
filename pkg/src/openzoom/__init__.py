"""Numerical thermodynamic formalism for open zooming systems."""

__version__ = "0.1.0"

"""Numerical laboratory for symplectic isotopies of the flat torus T^{2n}."""

__version__ = "0.1.0"

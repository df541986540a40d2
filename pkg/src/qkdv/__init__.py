"""Numerical and symbolic laboratory for the quasilinear KdV equation on the torus."""

__version__ = "0.1.0"

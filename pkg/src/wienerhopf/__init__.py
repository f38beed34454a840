"""Desk-scale spectral laboratory for shift and Wiener-Hopf operators on
weighted L^2 spaces of the half line."""

__version__ = "0.1.0"

"""Excursion-set geometry of Gaussian random spherical eigenfunctions."""

__version__ = "0.1.0"

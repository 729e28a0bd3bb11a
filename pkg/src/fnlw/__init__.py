"""Pseudo-spectral simulator for the fractional defocusing cubic wave equation on the torus."""

__version__ = "0.1.0"

"""Curve shortening flow on the unit sphere with chord-arc diagnostics."""

__version__ = "0.1.0"

"""Exact simulator for the Cantor potential game and related Diophantine tools."""

__version__ = "0.1.0"

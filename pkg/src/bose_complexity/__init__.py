"""Numerical laboratory for long-range interacting bosons on a lattice."""

__version__ = "0.1.0"

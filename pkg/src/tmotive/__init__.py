"""Exact and analytic computations of duals of Anderson T-motives."""

__version__ = "0.1.0"

"""Exact and Monte Carlo tools for random combinatorial matrices Q_{n,d}."""

__version__ = "0.1.0"

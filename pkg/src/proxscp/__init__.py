"""Prox-linear sequential convex programming with continuous-time constraint satisfaction."""

__version__ = "0.1.0"

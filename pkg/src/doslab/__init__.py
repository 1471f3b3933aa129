"""Density of states of Dirichlet Schrodinger operators -Delta + V on
growing domains, computed through the equivalent semiclassical problem
-hbar^2 Delta + V at hbar = 1/R."""

__version__ = "0.1.0"

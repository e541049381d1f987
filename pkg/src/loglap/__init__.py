"""Spectral computations for the Dirichlet logarithmic Laplacian."""

__version__ = "0.1.0"

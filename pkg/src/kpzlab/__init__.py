"""Computational laboratory for Brownian last passage percolation, Brownian
Gibbs line ensembles and the Brownian calculus that supports them."""

__version__ = "0.1.0"

"""Anneal slicing on a classical spin-vector Monte Carlo annealer."""
__version__ = "0.1.0"

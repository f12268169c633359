"""Twisted, pseudo-Riemannian and Krein-space spectral triples in finite dimension."""

__version__ = "0.1.0"

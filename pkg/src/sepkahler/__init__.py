"""Exact engine for separable Kaehler geometries of Segre-Veronese factorization structures."""

__version__ = "0.1.0"

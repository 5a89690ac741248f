"""Spectral generating bands and fractal dimensions of Sturmian Schrodinger operators."""

from .cfrac import ContinuedFraction, convergent, growth_K, parse_cf
from .tracemap import SpectralParams

__all__ = ["ContinuedFraction", "SpectralParams", "convergent", "growth_K", "parse_cf"]
__version__ = "0.1.0"

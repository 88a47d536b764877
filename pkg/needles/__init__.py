"""Intersection probabilities of a star of needles thrown onto a two-family line lattice."""

__version__ = "1.0.0"

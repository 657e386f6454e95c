"""Randomized extended Kaczmarz laboratory."""

__version__ = "0.1.0"

"""Uniform recovery of smooth functions on the unit cube: designs, reconstruction, envelopes and lower-bound certificates."""

__version__ = "0.1.0"

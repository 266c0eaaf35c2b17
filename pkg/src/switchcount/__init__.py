"""Bit-toggle power modeling and multiplier-free fixed-point inference."""

__version__ = "0.1.0"

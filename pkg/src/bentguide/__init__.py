"""Bound states of sharply bent two-dimensional waveguides."""

__version__ = "0.1.0"

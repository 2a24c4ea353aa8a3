"""Numerical sufficiency tests for jets of polynomial map-germs."""

__version__ = "0.1.0"

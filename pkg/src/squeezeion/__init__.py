"""Parametrically amplified spin-motion coupling in trapped-ion crystals."""

__version__ = "0.1.0"

"""Finite-model specification language and exhaustive checker."""

__version__ = "0.1.0"

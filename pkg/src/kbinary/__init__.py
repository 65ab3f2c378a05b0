"""Exact computations with binary complexes of finite Z/N-modules."""

__version__ = "0.1.0"

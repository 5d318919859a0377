"""Numerical laboratory for folding and delamination patterns in compressed thin films."""

__version__ = "0.1.0"

"""Penrose limits of homogeneous spaces: exact symbolic workbench."""

__version__ = "0.1.0"

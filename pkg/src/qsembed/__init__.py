"""Exact finite model of a dimension-lowering quasisymmetric embedding."""

__version__ = "0.1.0"

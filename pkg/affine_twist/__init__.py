"""Exact q-series, spectral flow, MLDEs and Zhu-algebra fusion for affine vertex algebras."""

__version__ = "0.1.0"

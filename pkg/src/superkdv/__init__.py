"""Exact symbolic engine for N=1 and N=2 supersymmetric KdV structures."""

__version__ = "0.1.0"

"""Numerical harness for bi-parameter dyadic paraproducts on a 2^n x 2^n grid."""

__version__ = "0.1.0"

from .dyadic import DyadicInterval, DyadicRect, Exponents, GridFunction, OpenSetMask  # noqa: E402
from .haar import HaarField, analyze, square_function, synthesize  # noqa: E402

__all__ = [
    "__version__",
    "DyadicInterval",
    "DyadicRect",
    "Exponents",
    "GridFunction",
    "OpenSetMask",
    "HaarField",
    "analyze",
    "synthesize",
    "square_function",
]

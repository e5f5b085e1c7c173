"""Weighted Diophantine approximation over F_q((1/t)) with exact lattice arithmetic."""
from .algebra import FqElem, FqPoly, LaurentNum, LogNorm, abs_log, laurent_split, poly_arith
from .weights import Weights

__version__ = "0.1.0"

__all__ = ["FqElem", "FqPoly", "LaurentNum", "LogNorm", "Weights", "abs_log", "laurent_split",
           "poly_arith", "__version__"]

"""Exact quantum query algorithms for pdsp and Maiorana-McFarland functions, with classical baselines."""

from ._core import BACKEND
from .boolfn import ANF, DyadicRational, TruthTable

__version__ = "0.1.0"

__all__ = ["ANF", "BACKEND", "DyadicRational", "TruthTable", "__version__"]

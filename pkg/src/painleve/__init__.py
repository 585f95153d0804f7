"""Exact Painleve test and singularity regularization for polynomial ODE systems."""

from .algebra import Fraction, MultiPoly, Q, RatMatrix
from .core import analyze_system
from .model import hamiltonian_to_system, parse_hamiltonian, parse_input, parse_system
from .regularize import regularize

__version__ = "0.1.0"

__all__ = [
    "Fraction",
    "MultiPoly",
    "Q",
    "RatMatrix",
    "analyze_system",
    "hamiltonian_to_system",
    "parse_hamiltonian",
    "parse_input",
    "parse_system",
    "regularize",
    "__version__",
]

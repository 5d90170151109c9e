"""Internal averaging along characteristics for weakly nonlinear hyperbolic systems.

The reference pipeline is the shallow-water model: the averaged system is
solved once on slow time and compared against direct solutions of the
original equations at ``t ~ 1/eps``.
"""

from .core import (Field, FieldPair, PeriodicGrid, Spectrum, fourier_coeffs, inverse_fourier,
                   make_grid, sample)
from .direct_solver import DirectState, ModelKind, evaluate_asymptotic, solve_direct
from .averaged_solver import SchemeParams, run as run_averaged

__all__ = [
    "DirectState", "Field", "FieldPair", "ModelKind", "PeriodicGrid", "SchemeParams",
    "Spectrum", "evaluate_asymptotic", "fourier_coeffs", "inverse_fourier", "make_grid",
    "run_averaged", "sample", "solve_direct",
]

__version__ = "0.1.0"

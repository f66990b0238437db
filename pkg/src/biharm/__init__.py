"""Kernels, solvers and exponent calculus for the fourth-order operator Lap^2 + k^2."""

__version__ = "0.1.0"

from . import exponents, greens, nonlinear, operators, specfun, spectral, verify  # noqa: F401

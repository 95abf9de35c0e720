"""Kinetic and Lagrangian structure of 1-D conservation laws.

Exact front tracking for scalar laws and for gamma = 3 isentropic gas
dynamics, curve-based representations of the kinetic formulation, explicit
kinetic measures and the diagnostics built on them.
"""
from ._accel import backend
from .errors import KinlagError, NumericalError, ValidationError

__version__ = "0.1.0"

__all__ = ["backend", "KinlagError", "NumericalError", "ValidationError", "__version__"]

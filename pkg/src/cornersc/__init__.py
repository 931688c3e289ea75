"""Spectral quantities and Ginzburg-Landau minimizers for planar domains with corners.

The package computes ground-state eigenvalues of the magnetic Neumann
Laplacian on angular sectors and polygons, the critical-field curve
derived from them, and nonlinear Ginzburg-Landau minimizers at desk
scale, together with the localization diagnostics that justify the
corner-by-corner picture.
"""

from cornersc.errors import (
    AccuracyError,
    ConditioningError,
    ConvergenceError,
    CornerscError,
    GeometryError,
    MeshingError,
    ParameterError,
    SolverError,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "ConditioningError",
    "ConvergenceError",
    "CornerscError",
    "GeometryError",
    "MeshingError",
    "ParameterError",
    "SolverError",
    "__version__",
]

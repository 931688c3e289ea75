"""Error taxonomy shared by every module.

Each failure mode gets its own exception class so callers (and the CLI
exit-code mapping) can react without string matching.  The ``code``
attribute is the stable machine-readable name; it is what appears in
reports and CLI error output.
"""

from __future__ import annotations


class CornerscError(Exception):
    """Base class for all package errors."""

    code = "error"


class ParameterError(CornerscError):
    """A scalar or grid argument is outside its documented domain."""

    code = "invalid-parameter"


class GeometryError(CornerscError):
    """A domain description is malformed (self-intersection, collinear
    vertex triple, empty interior, bad orientation)."""

    code = "invalid-geometry"


class MeshingError(CornerscError):
    """Mesh generation could not reach the requested quality floor."""

    code = "meshing-failure"


class ConvergenceError(CornerscError):
    """An iterative solver stopped before meeting its tolerance.

    Carries the best iterate's diagnostics so callers can inspect or
    restart rather than guess.
    """

    code = "convergence-failure"

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class AccuracyError(CornerscError):
    """A result converged but its error estimate exceeds the request."""

    code = "accuracy-not-met"


class SolverError(CornerscError):
    """A linear-algebra backend failed (factorization, ARPACK breakdown)."""

    code = "solver-error"


class ConditioningError(CornerscError):
    """A fit or extrapolation is too ill-conditioned to trust."""

    code = "conditioning-error"


class InstabilityError(CornerscError):
    """An iteration produced NaN/Inf or an energy increase it cannot explain."""

    code = "numerical-instability"


class NoRootError(CornerscError):
    """A bracketed root solve found no sign change in the search interval."""

    code = "no-root"


class UndefinedRatioError(CornerscError):
    """A requested ratio has a vanishing denominator (e.g. a trivial state)."""

    code = "undefined-ratio"

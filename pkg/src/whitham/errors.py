"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class WhithamError(Exception):
    """Base class for every error raised by this package."""


class ConvergenceError(WhithamError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class AccuracyError(WhithamError):
    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (error estimate {estimate:.3e})")
        self.estimate = estimate


class NearSingularError(WhithamError):
    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition number {condition:.3e})")
        self.condition = condition


class NodalCurveError(WhithamError):
    """The defining polynomial has a repeated root."""


class GeometryError(WhithamError):
    """A path, loop or point comes too close to a singularity."""


class ConsistencyError(WhithamError):
    """An internal consistency check (closure, intersection form) failed."""


class ResidueTheoremError(WhithamError):
    """Prescribed residues do not sum to zero."""


class EmptySingularPartError(WhithamError):
    """A singular part does not have the declared exact pole order."""


class NormalizationError(WhithamError):
    """Real normalization is impossible (non-imaginary residues)."""


class SymplecticError(WhithamError):
    """A basis-change matrix is not integral symplectic."""


class UniquenessError(WhithamError):
    """Two real-normalized differentials with equal singular parts disagree."""


class StepSizeError(WhithamError):
    """Finite-difference step too large for the local nonlinearity."""


class ContinuationStallError(WhithamError):
    """Leaf continuation step fell below the minimal step size."""

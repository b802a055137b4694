"""Exception hierarchy for the solver.

Every error raised on purpose by this package derives from GameError and
carries a short machine-readable code, so the CLI can map failures to exit
statuses without string matching.
"""

from __future__ import annotations


class GameError(Exception):
    """Base class; `code` identifies the failure kind."""

    code = "GAME_ERROR"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class ValidationError(GameError):
    """Bad parameters, states, or controls."""

    code = "VALIDATION"


class BoundaryRegimeError(ValidationError):
    """Speed or radius ratios sit exactly on a regime boundary; degenerate."""

    code = "BOUNDARY"


class RegimeError(ValidationError):
    """Operation not defined in the requested regime (e.g. slower evader)."""

    code = "REGIME"


class SingularControlError(GameError):
    """A pursuer switching term vanished; the caller owns the resolution.

    `wheels` lists which of 'u1'/'u2' are singular.
    """

    code = "SINGULAR_CONTROL"

    def __init__(self, wheels, **details):
        self.wheels = tuple(wheels)
        super().__init__(f"singular switching term for {'+'.join(self.wheels)}", **details)


class DegenerateCostateError(GameError):
    """Costate magnitude is (numerically) zero; no direction defined."""

    code = "DEGENERATE_COSTATE"


class PolarSingularityError(GameError):
    """Polar chart evaluated inside its excluded disc r < 1e-9."""

    code = "POLAR_SINGULARITY"


class NonFiniteError(GameError):
    """Integration produced NaN or infinity; aborted."""

    code = "NON_FINITE"


class ArcDomainError(GameError):
    """Arc evaluated outside its validity interval or parameter range."""

    code = "ARC_DOMAIN"


class CoverageError(GameError):
    """Constructed arcs fail to cover the annulus; lists uncovered cells."""

    code = "COVERAGE"

    def __init__(self, message: str, uncovered=(), **details):
        self.uncovered = list(uncovered)
        super().__init__(message, **details)


class AlreadyEscapedError(GameError):
    """Query state lies outside the detection circle."""

    code = "ALREADY_ESCAPED"


class InsideBodyError(GameError):
    """Query state lies inside the robot body disc."""

    code = "INSIDE_BODY"


class ConvergenceError(GameError):
    """Iterative solver hit its cap before meeting tolerance."""

    code = "NON_CONVERGENCE"


class SnapshotRangeError(GameError):
    """Snapshot time outside the simulated interval."""

    code = "SNAPSHOT_RANGE"

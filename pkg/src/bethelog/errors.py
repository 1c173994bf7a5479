"""Exception hierarchy.

Input problems derive from ValueError, numerical failures from
RuntimeError, so callers can split "fix your input" from "tighten the
numerics" without importing every class.
"""


class BetheLogError(Exception):
    pass


class PreconditionError(BetheLogError, ValueError):
    pass


class InvariantError(BetheLogError, ValueError):
    pass


class SchemaError(BetheLogError, ValueError):
    """Malformed spectrum or model file; ``field`` names the offender."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class UnitError(SchemaError):
    pass


class ResolutionError(PreconditionError):
    pass


class ConvergenceError(BetheLogError, RuntimeError):
    """Adaptive quadrature ran out of subdivisions.

    Carries the best estimate and its error bound so callers can decide
    whether the partial result is still usable.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf")):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class AccuracyError(BetheLogError, RuntimeError):
    pass


class ConsistencyError(BetheLogError, RuntimeError):
    pass


class CutoffError(PreconditionError):
    """The cutoff does not lie above every transition frequency."""

"""Exception hierarchy. Every domain failure derives from ``RigidityError``."""


class RigidityError(Exception):
    """Base class for domain failures (CLI exit code 1)."""


class InputError(RigidityError, ValueError):
    """Malformed or inconsistent input (CLI exit code 2)."""


class EdgeSizeMismatch(InputError):
    pass


class VertexOutOfRange(InputError):
    pass


class ParseError(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class ZeroVector(InputError):
    pass


class BadPrime(InputError):
    pass


class TooLarge(RigidityError):
    pass


class NotTight(RigidityError):
    pass


class NotMinimallyRigid(RigidityError):
    pass


class MatchingFailed(RigidityError):
    """Row selection for the genericity certificate failed; indicates a bug."""


class Infeasible(RigidityError):
    pass


class GenerationStuck(RigidityError):
    pass


class ChartFailure(RigidityError):
    pass


class DegenerateNormalizer(RigidityError):
    pass


class TooFewPins(RigidityError):
    pass


class NoConvergence(RigidityError):
    """Raised by the solvers; carries the best iterate found."""

    def __init__(self, message, best_x=None, best_residual=float("inf"), stage=None):
        super().__init__(message)
        self.best_x = best_x
        self.best_residual = best_residual
        self.stage = stage

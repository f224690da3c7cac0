"""Exception hierarchy shared by all socqp modules."""


class SocqpError(Exception):
    """Base class for all errors raised by socqp."""


class InvalidMatrix(SocqpError):
    """Matrix input is malformed (non-finite, wrong shape, not symmetric)."""


class NotPsd(SocqpError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class NotPositiveDefinite(SocqpError):
    """Matrix is not positive definite at the requested tolerance."""


class InvalidInput(SocqpError):
    """Generic invalid argument (dimension mismatch, bad value)."""


class InvalidIndex(SocqpError):
    """Constraint or block index out of range."""


class InvalidBounds(SocqpError):
    """Lower/upper bound pair is inconsistent."""


class InvalidInstance(SocqpError):
    """Problem instance violates a structural requirement."""


class EmptyInterior(SocqpError):
    """Feasible region has no strictly interior point."""


class InvalidProgram(SocqpError):
    """Cone program dimensions are inconsistent."""


class InvalidMultiplier(SocqpError):
    """Dual multiplier pairs with an infinite bound; dual term undefined."""


class WrongShape(SocqpError):
    """Instance shape does not match the requested reformulation."""


class ConditionNotMet(SocqpError):
    """An exactness condition required by a recovery routine does not hold."""


class TightenFailed(SocqpError):
    """Cone-gap tightening did not close the gap; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class PreconditionViolated(SocqpError):
    """A documented precondition of the operation is violated."""


class EmptyFeasibleGrid(SocqpError):
    """No grid point is feasible at the oracle's resolution."""


class UnboundedBox(SocqpError):
    """No finite search box can be inferred for the grid oracle."""


class ParseError(SocqpError):
    """Instance file cannot be parsed; message carries field diagnostics."""

"""Exception taxonomy shared by all rwiso modules."""


class RwisoError(Exception):
    """Base class for all library errors."""


class SizeCapError(RwisoError):
    """A generator was asked for a graph above the configured vertex cap."""


class GenerationError(RwisoError):
    """Random generation exhausted its resampling budget."""


class EdgeListParseError(RwisoError):
    """Malformed edge-list input; carries the 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ConnectivityError(RwisoError):
    """The graph (or requested support) is not connected."""


class DomainError(RwisoError):
    """An argument is outside the operation's domain (empty set, bad mass, ...)."""


class NumericError(RwisoError):
    """An iterative solver failed to reach its target residual."""


class BudgetExceededError(RwisoError):
    """An exact computation would exceed its configured state/enumeration budget."""


class DegeneracyError(RwisoError):
    """A conditioned law lost all of its mass."""

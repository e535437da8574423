"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A precondition on an operation's parameters was violated."""


class ParseError(ValueError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionMismatchError(ValueError):
    """Two objects that must agree on a dimension or size do not."""


class EmptySelectionError(ValueError):
    """A bit assignment selected no clusters, so nothing can be decoded."""


class ProblemTooLargeError(ValueError):
    """Exhaustive enumeration was requested beyond its size guard."""


class NotEnoughClustersError(ValueError):
    """Silhouette needs at least two clusters."""


class DoubleInitError(RuntimeError):
    """The malleable runtime was initialised twice."""


class ContractViolationError(RuntimeError):
    """A lease phase contract was violated (e.g. expand during quantum)."""


class CalibrationError(ValueError):
    """The observed table admits no feasible workload model."""

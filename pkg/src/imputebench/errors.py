"""Exception hierarchy.

Three tiers, matching the CLI exit-code contract: usage errors (bad
arguments or config, exit 1), data errors (malformed or incompatible
inputs, exit 2), and numeric failures (algorithms that cannot proceed,
exit 3).
"""


class ImputeBenchError(Exception):
    """Base class for all package errors."""


class UsageError(ImputeBenchError):
    """Bad command line, config file, or option key."""


class DataError(ImputeBenchError):
    """Input data violates a contract."""


class NumericError(ImputeBenchError):
    """A numeric routine cannot produce a valid result."""


# --- data errors ---------------------------------------------------------

class DimensionMismatchError(DataError):
    pass


class ShapeMismatchError(DataError):
    pass


class ZeroVarianceError(DataError):
    def __init__(self, column):
        super().__init__(f"column {column!r} has zero observed variance")
        self.column = column


class TooFewObservedError(DataError):
    def __init__(self, column):
        super().__init__(f"column {column!r} has fewer than 2 observed cells")
        self.column = column


class EmptyResultError(DataError):
    pass


class AlreadyMissingError(DataError):
    pass


class PercentOutOfRangeError(DataError):
    pass


class AllMissingColumnError(DataError):
    def __init__(self, column):
        super().__init__(f"column {column!r} has no observed cells")
        self.column = column


class TooFewRowsError(DataError):
    pass


class EmptyInputError(DataError):
    pass


class EmptyDonorPoolError(DataError):
    pass


class MissingCellError(DataError):
    def __init__(self, method, variable, pct):
        super().__init__(
            f"summary is missing method={method!r} variable={variable!r} pct={pct}"
        )
        self.method = method
        self.variable = variable
        self.pct = pct


class MissingOutputsError(DataError):
    pass


# --- numeric failures ----------------------------------------------------

class SingularDesignError(NumericError):
    pass


class NoConvergenceError(NumericError):
    """EM hit the iteration cap; carries the last iterate in ``params``."""

    def __init__(self, max_iter, params=None, replicate=None):
        where = "" if replicate is None else f" (bootstrap replicate {replicate})"
        super().__init__(f"EM did not converge within {max_iter} iterations{where}")
        self.max_iter = max_iter
        self.params = params
        self.replicate = replicate


class DegenerateSigmaError(NumericError):
    pass


class SingularObservedBlockError(NumericError):
    pass


class NotPsdError(NumericError):
    pass


class ZeroWithinVarianceError(NumericError):
    pass

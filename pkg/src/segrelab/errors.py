"""Exception types shared across the package."""


class GeometryError(Exception):
    """Base class for all segrelab errors."""


class InvalidDimension(GeometryError, ValueError):
    pass


class AmbientMismatch(GeometryError, ValueError):
    pass


class ShapeMismatch(GeometryError, ValueError):
    pass


class InvalidStructure(GeometryError, ValueError):
    """Raw point/line data violates the partial linear space axioms."""


class LineTooShort(InvalidStructure):
    pass


class IsolatedPoint(InvalidStructure):
    pass


class TwoLinesShareTwoPoints(InvalidStructure):
    pass


class NotAHyperplane(GeometryError, ValueError):
    pass


class CapExceeded(GeometryError, RuntimeError):
    """A search or construction exceeds the configured desk-scale cap."""


class LineNotInSubset(GeometryError, ValueError):
    pass


class TooFewFactors(GeometryError, ValueError):
    pass


class EmptyPointSet(GeometryError, ValueError):
    pass


class HypothesisFailed(GeometryError, RuntimeError):
    """An operation's geometric hypothesis does not hold for the input.

    ``clause`` names the violated hypothesis so callers and reports can
    show which gate failed.
    """

    def __init__(self, clause: str, message: str = ""):
        self.clause = clause
        super().__init__(message or clause)


class NotParallelismPreserving(GeometryError, ValueError):
    pass


class NoFormExists(GeometryError, RuntimeError):
    pass


class WrongArity(GeometryError, ValueError):
    pass

"""Exception types shared across modules."""


class CompetitionError(Exception):
    """Base class for library errors."""


class ConvergenceError(CompetitionError):
    """An iterative method exhausted its budget."""

    def __init__(self, message, iterations=None, partial=None):
        super().__init__(message)
        self.iterations = iterations
        self.partial = partial


class MonotonicityError(CompetitionError):
    """A monotone sequence moved the wrong way by more than round-off.

    Signals a shift that does not dominate the reaction slope, or a start
    that is not an upper/lower solution.
    """


class CriterionMarginError(CompetitionError):
    """A strict inequality is too tight to certify numerically."""


class RatioDegeneracyError(CompetitionError):
    """A ratio of fields has a denominator that vanishes at an interior node."""


class NonexistenceError(CompetitionError):
    """A logistic problem has no positive solution on this grid."""

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin

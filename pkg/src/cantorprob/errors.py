"""Exception hierarchy.

Every failure raised by the library derives from :class:`MeasureError`, so
callers (and the CLI) can catch one type.  Subclasses carry the offending
data as attributes where that is useful for diagnostics.
"""


class MeasureError(ValueError):
    pass


class PreconditionError(MeasureError):
    """A caller-supplied argument violates an operation's precondition."""


# finite spaces and morphisms

class ZeroOrNegativeWeight(MeasureError):
    pass


class WeightsDoNotSumToOne(MeasureError):
    pass


class DuplicateLabel(MeasureError):
    pass


class NotSurjective(MeasureError):
    pass


class FiberSumMismatch(MeasureError):
    def __init__(self, atom, expected, actual):
        self.atom = atom
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"fiber over {atom!r} has mass {actual}, expected {expected}")


class CodomainMismatch(MeasureError):
    pass


class SquareDoesNotCommute(MeasureError):
    pass


# towers

class LevelOutOfRange(MeasureError):
    pass


class BondMismatch(MeasureError):
    pass


class NonSurjectiveBond(MeasureError):
    pass


# splitting

class RatioOutOfRange(PreconditionError):
    pass


class EmptyClopen(PreconditionError):
    pass


class NotSubset(PreconditionError):
    pass


class ZeroDenominator(PreconditionError):
    pass


class TracesNotDisjoint(PreconditionError):
    pass


class ScheduleInsufficient(PreconditionError):
    pass


# extension engines

class NotPrime(PreconditionError):
    pass


class AnchorIncompatible(PreconditionError):
    pass


class PartitionMeasureMismatch(PreconditionError):
    pass


class TraceMismatch(PreconditionError):
    pass


class InsufficientGenericity(PreconditionError):
    def __init__(self, tasks):
        self.tasks = list(tasks)
        super().__init__(f"{len(self.tasks)} split task(s) needed")


class InsufficientCoverage(PreconditionError):
    def __init__(self, level):
        self.level = level
        super().__init__(f"anchor level {level} is not realized in the base")


class TraceNotMeasureZero(PreconditionError):
    pass


class BondIncompatibleH(PreconditionError):
    pass


# value sets

class NonMAdicInput(PreconditionError):
    pass


class ZAtomNotPowerDenominator(PreconditionError):
    pass


class PreconditionViolated(PreconditionError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class AllAtomsZero(MeasureError):
    pass


class ParseError(ValueError):
    """Input file does not match its schema."""

    def __init__(self, path, location, message=""):
        self.path, self.location = str(path), str(location)
        super().__init__(f"{self.path}: {self.location}: {message}".rstrip(": "))


class ReceiptFailure(RuntimeError):
    def __init__(self, invariant, problems=()):
        self.invariant = invariant
        self.problems = list(problems)
        super().__init__(f"receipt {invariant!r} failed: {self.problems[:3]}")

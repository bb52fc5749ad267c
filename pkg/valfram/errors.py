"""
Typed errors for the validation toolkit

InputError subclasses are fatal while loading inputs.
MetricError subclasses are raised by the statistical kernels and steps and
end up as Failed records in a report instead of aborting a run.
"""

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SourceLocation:
    """Position of a row inside an input file (1-based, header is line 1)"""
    file: str
    line: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}"


class ValframError(Exception):
    """Base class of every error raised by the toolkit"""


# Input errors

class InputError(ValframError):
    """Malformed or inconsistent input data"""


class ParseError(InputError):
    def __init__(self, location: SourceLocation, reason: str):
        self.location = location
        self.reason = reason
        super().__init__(f"{location}: {reason}")


class UnknownZone(ParseError):
    pass


class NegativeCount(ParseError):
    pass


class InvariantViolation(InputError):
    def __init__(self, reason: str, location: Optional[SourceLocation] = None):
        self.location = location
        self.reason = reason
        super().__init__(f"{location}: {reason}" if location else reason)


class MixedLocationPresence(InputError):
    pass


class EmptyDataset(InputError):
    pass


class InvalidConfig(InputError):
    pass


class InvalidSpec(InputError):
    pass


class UnknownKind(InputError):
    pass


# Metric errors

class MetricError(ValframError):
    """A statistic could not be computed for the given inputs"""


class EmptySample(MetricError):
    pass


class NonFiniteValue(MetricError):
    pass


class DegenerateValidation(MetricError):
    pass


class DegenerateModel(MetricError):
    pass


class DegenerateBounds(MetricError):
    pass


class EmptyPoints(MetricError):
    pass


class TooFewPoints(MetricError):
    pass


class ShapeMismatch(MetricError):
    pass


class EmptyInput(MetricError):
    pass


class NoOverlap(MetricError):
    pass


class EmptyTargetZones(MetricError):
    pass


class ZeroMatrix(MetricError):
    pass


class ZoneMismatch(MetricError):
    pass


class EmptySupport(MetricError):
    pass


class NoCommonVocabulary(MetricError):
    pass


class MissingLocations(MetricError):
    pass

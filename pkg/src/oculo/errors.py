"""Exception hierarchy shared by all pipeline stages.

Every malformed input or unusable signal maps to one of these named
errors; nothing in the package raises bare ValueError for data problems.
"""

from __future__ import annotations


class OculoError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(OculoError):
    """A recording or log could not be parsed (CLI exit code 2)."""


class BadMagic(ParseError):
    """Input does not start with the session file magic."""


class TruncatedPayload(ParseError):
    """Declared sample count does not match the payload length."""


class NonMonotonicTimestamps(ParseError):
    """Timestamps are not strictly increasing."""


class NonFiniteField(ParseError):
    """A float field is NaN/Inf, or a direction is too far from unit length."""


class UnknownTask(ParseError):
    """Stimulus log header names no known task."""


class IllegalPosition(ParseError):
    """Stimulus position outside the set allowed for the task."""


class MalformedRecord(ParseError):
    """A stimulus log line does not match the expected record layout."""


class AnalysisError(OculoError):
    """The signal exists but cannot be analyzed as requested (exit code 3)."""


class EmptySession(AnalysisError):
    pass


class TraceTooShort(AnalysisError):
    pass


class EmptyTrack(AnalysisError):
    pass


class BadWindow(AnalysisError):
    """Filter window is even or below 3."""


class BadOrder(AnalysisError):
    """Polynomial order is below 1 or not less than the window."""


class WrongTask(AnalysisError):
    """Operation applied to a track of an incompatible task kind."""


class DegenerateParameter(AnalysisError):
    """All cohort values of a parameter are equal; min-max range is zero."""


class EmptyGroup(AnalysisError):
    """No rows to aggregate."""


class AllSessionsFailed(AnalysisError):
    """Every session in a batch failed to analyze (exit code 4)."""


class FeatureUndefined(AnalysisError):
    """A feature has no valid events in this session; reported as absent."""


class NoSaccadesDetected(FeatureUndefined):
    pass


class NoCorrectSaccades(FeatureUndefined):
    pass


class TooFewTrials(FeatureUndefined):
    pass


class MissingStimulusClass(FeatureUndefined):
    pass


class DegenerateGradient(FeatureUndefined):
    """Gradient MAD is zero; the outlier threshold is undefined."""

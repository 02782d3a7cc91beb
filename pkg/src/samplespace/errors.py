"""Exception hierarchy shared by all modules."""


class SampleSpaceError(Exception):
    """Base class for domain errors raised by this package."""


class SpaceMismatchError(SampleSpaceError, TypeError):
    """Points or measures from different spaces were combined."""


class DimensionError(SampleSpaceError, ValueError):
    """Sizes of samples, matrices or partitions do not agree."""


class MassError(SampleSpaceError, ValueError):
    """Weights do not sum to one or capacities do not sum to n."""


class NonUniqueGeodesic(SampleSpaceError):
    """The minimizing geodesic between two points is not unique."""


class CutLocusError(SampleSpaceError):
    """The logarithm is undefined because the target is in the cut locus."""


class UnsupportedOperation(SampleSpaceError):
    """The operation is not available on this space (e.g. log on a spider)."""


class ConfigError(SampleSpaceError, ValueError):
    """Invalid configuration, law/space mismatch or violated size guard.

    ``errors`` lists every problem found, one string per violation.
    """

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors) if errors else [str(message)]


class ExperimentAbort(SampleSpaceError):
    """An experiment precondition failed; ``diagnostics`` explains why."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

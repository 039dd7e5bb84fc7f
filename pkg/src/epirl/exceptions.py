"""Exception hierarchy.

Every error carries a human-readable message; the CLI serialises the class
name and message into its error JSON.
"""


class EpirlError(Exception):
    """Base class for all package errors."""


class DatasetFormatError(EpirlError, ValueError):
    """Base class for problems found while reading a genotype file."""


class MalformedHeaderError(DatasetFormatError):
    pass


class GenotypeDomainError(DatasetFormatError):
    """A genotype cell is not one of 0, 1, 2."""


class ClassLabelError(DatasetFormatError):
    """A class label is not 0 or 1."""


class RaggedRowError(DatasetFormatError):
    pass


class MissingValueError(DatasetFormatError):
    pass


class EmptyClassError(DatasetFormatError):
    """The dataset has no cases or no controls."""


class PreconditionError(EpirlError, ValueError):
    pass


class UnsatisfiableSimulationError(EpirlError, RuntimeError):
    """The rejection sampler ran out of budget before filling both classes."""


class CapacityError(EpirlError, ValueError):
    """The requested interaction order exceeds the supported cell table size."""


class CombinationOverflowError(EpirlError, OverflowError):
    pass


class NumericFailureError(EpirlError, FloatingPointError):
    """A forward or backward pass produced a non-finite value.

    ``snapshot`` holds copies of the parameters at the time of failure and
    ``iteration`` the training iteration, when known.
    """

    def __init__(self, message, snapshot=None, iteration=None):
        super().__init__(message)
        self.snapshot = snapshot or {}
        self.iteration = iteration

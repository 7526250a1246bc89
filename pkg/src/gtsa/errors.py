"""Exception types raised across the package.

Every failure mode a caller is expected to handle gets its own class so
callers can catch narrowly; all inherit from GtsaError.
"""


class GtsaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(GtsaError, ValueError):
    """Malformed argument: bad dimension, non-finite entry, length mismatch."""


class SymmetryError(InvalidInputError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class DegenerateWeightsError(GtsaError):
    """All weights in a weighted sum are zero; normalization impossible."""


class DegenerateNeighborhoodError(GtsaError):
    """A point's neighborhood carries no positive weight."""


class InsufficientSamplesError(GtsaError):
    """Fewer samples than the operation needs."""


class InsufficientSubsetError(GtsaError):
    """A labeled split is too small to run the pipeline on."""


class MissingLabelsError(GtsaError):
    """Operation requires class labels but the dataset has none."""


class ParseError(GtsaError):
    """CSV or config text could not be parsed; message carries the location."""


class InvalidKError(InvalidInputError):
    """Neighbor count k is out of range for the dataset size."""


class UnreachableNodeError(GtsaError):
    """Shortest-path query on a graph with unreachable node pairs."""


class SupportTooLargeError(GtsaError):
    """Exact transport solver called with more atoms than its cap."""


class NumericalUnderflowError(GtsaError):
    """Scaling kernel underflowed to zero; use a larger epsilon or log domain."""


class DegenerateKernelError(GtsaError):
    """Centered kernel matrix has no usable spectrum."""


class UnsupportedDimensionError(GtsaError):
    """Operation only defined for a specific dimensionality (e.g. 2-D plots)."""

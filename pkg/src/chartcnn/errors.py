"""Typed error hierarchy shared across the package.

The CLI maps these onto process exit codes, so raising the right family
matters more than the message text: configuration and shape problems are
operator errors (exit 2), bad or missing data is exit 3, and non-finite
numerics is exit 4.
"""


class ChartCnnError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(ChartCnnError):
    """An argument value violates a documented precondition."""


class ConfigError(ChartCnnError):
    """Run configuration failed validation.

    Carries every violation found, not just the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config: " + "; ".join(self.violations))


class DataError(ChartCnnError):
    """Input data is malformed, inconsistent, or unusable."""


class InsufficientDataError(DataError):
    """Not enough observations to perform the operation."""


class OutOfRangeError(DataError):
    """An index or horizon points past the end of the available data."""


class ParseError(DataError):
    """A text record could not be parsed; message names the row."""


class FormatError(DataError):
    """A binary artifact (image, checkpoint) is corrupt or foreign."""


class ConsistencyError(DataError):
    """On-disk artifacts disagree with their manifest."""


class DependencyError(DataError):
    """A pipeline stage ran before the artifact it consumes exists."""


class ShapeError(ChartCnnError):
    """Tensor or series shapes do not line up."""


class ResolutionError(ShapeError):
    """The canvas is too small for the series it should display."""


class ArchitectureError(ShapeError):
    """A layer stack cannot be constructed over the given input shape."""


class NumericError(ChartCnnError):
    """A computation produced a non-finite value."""

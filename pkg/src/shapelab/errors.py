"""Exception hierarchy."""


class ShapeLabError(Exception):
    """Base class for all errors raised by shapelab."""


class GridError(ShapeLabError, ValueError):
    """Invalid grid, mismatched grids or non-finite samples."""


class DimensionError(GridError):
    """Operation does not support the dimension of its input."""


class PreconditionError(ShapeLabError, ValueError):
    """An input violates a documented precondition.

    ``report`` carries the membership report (with witness) when the
    violated precondition is a cone membership.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SeriesTruncationError(ShapeLabError, RuntimeError):
    """A truncated series did not reach its tail bound within the cap."""


class DivergenceError(ShapeLabError, RuntimeError):
    """Empirical Miyadera constant is >= 1; the perturbation series is not controlled."""


class ConfigError(ShapeLabError, ValueError):
    """Experiment configuration failed validation."""

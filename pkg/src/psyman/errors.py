"""Exception hierarchy shared by every psyman module.

The CLI maps PsymanError subclasses to exit code 2 (usage/data problems)
and anything else to exit code 3 (internal invariant failure).
"""


class PsymanError(Exception):
    """Base class for all toolkit errors."""


class FormatError(PsymanError):
    """Malformed file or stream: bad magic, truncation, ragged CSV rows."""


class DataError(PsymanError):
    """Well-formed container holding unacceptable values (NaN/Inf, out of range)."""


class ShapeError(PsymanError):
    """Dimension or length mismatch between arguments."""


class DegenerateInput(PsymanError):
    """Input on which the statistic is undefined (zero variance, single cluster)."""


class AlignmentError(PsymanError):
    """Two tables that must share ids/names do not."""


class ConfigError(PsymanError):
    """Invalid configuration value (perplexity, sizes, labels out of range)."""


class OptimizationError(PsymanError):
    """Numeric failure during iterative optimization."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message if iteration is None else f"{message} (iteration {iteration})")
        self.iteration = iteration


class TensorWriteError(PsymanError):
    """Sink write failure; carries how many bytes were written before it."""

    def __init__(self, message: str, bytes_written: int):
        super().__init__(f"{message} ({bytes_written} bytes written)")
        self.bytes_written = bytes_written

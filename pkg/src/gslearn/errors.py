"""Exception hierarchy shared by every gslearn module."""


class GSLError(Exception):
    """Base class for all gslearn errors."""


class DimensionError(GSLError, ValueError):
    """Array shapes are inconsistent with each other or with the node count."""


class ParameterError(GSLError, ValueError):
    """A scalar or configuration parameter is outside its valid range."""


class ContractError(GSLError):
    """An input violates a documented precondition (e.g. asymmetry, cache mismatch)."""


class NumericError(GSLError, ArithmeticError):
    """A numerical quantity is undefined for the given data (e.g. zero variance)."""


class DomainError(GSLError, ValueError):
    """An objective is evaluated outside its domain (e.g. non-PD precision)."""


class StepFailure(GSLError):
    """An iterative step could not make progress (line search exhausted, divergence)."""


class SolverError(GSLError):
    """Wraps a step error with the iteration index at which it occurred."""

    def __init__(self, iteration, cause):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"iteration {iteration}: {cause}")


class FormatError(GSLError):
    """Base class for on-disk format problems."""


class BadMagicError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class TruncatedFileError(FormatError):
    def __init__(self, expected, actual, what="file"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"truncated {what}: expected at least {expected} bytes, found {actual}")


class LengthMismatchError(FormatError):
    pass


class SchemaError(FormatError):
    """A JSON document does not match the expected schema."""


class EdgeListError(FormatError):
    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class LayerError(GSLError):
    """Wraps a layer failure with the index of the layer that raised it."""

    def __init__(self, layer, cause):
        self.layer = layer
        self.cause = cause
        super().__init__(f"layer {layer}: {cause}")


class TrainingError(GSLError):
    pass

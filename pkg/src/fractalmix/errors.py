"""Exception types shared across the package.

The CLI maps these onto exit codes: ParameterError -> 1 (usage),
DecodeError and OSError -> 2 (I/O), ConfigurationError -> 3 (config).
"""


class ParameterError(ValueError):
    """An argument violates an operation's precondition."""


class ConfigurationError(RuntimeError):
    """A configuration is inconsistent or leaves the pipeline unable to run."""


class DecodeError(RuntimeError):
    """Encoded image bytes could not be decoded."""


class BatchItemError(RuntimeError):
    """Failure while augmenting one item of a batch; carries the item index."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"batch item {index}: {cause}")
        self.index = index
        self.cause = cause

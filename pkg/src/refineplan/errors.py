"""Exception hierarchy shared across the engine.

The CLI maps these onto exit codes: format/parse problems are exit 3,
numeric or degenerate inputs are exit 4, missing files are exit 2.
"""


class EngineError(Exception):
    """Base class for every error the engine raises on bad input."""


class TensorFormatError(EngineError):
    """Tensor file is malformed: wrong magic, bad rank, zero dims, trailing bytes."""


class TruncatedPayloadError(TensorFormatError):
    """Tensor file ends before the declared payload is complete."""


class NonFiniteValueError(EngineError):
    """A tensor or map contains NaN or infinity."""


class DegenerateInputError(EngineError):
    """Numerically unusable input: zero-norm vectors, all-zero matrices."""


class ConlluParseError(EngineError):
    """CoNLL-U input is malformed or violates tree invariants."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

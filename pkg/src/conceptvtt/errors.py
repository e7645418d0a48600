"""Exception hierarchy shared by every module."""


class VTTError(Exception):
    """Base class for all errors raised by conceptvtt."""


class ParameterError(VTTError, ValueError):
    """Invalid kernel or configuration parameter."""


class InputError(VTTError, ValueError):
    """A value lies outside the domain an operation accepts."""


class ConditioningError(VTTError):
    """The GP Gram matrix could not be factorised."""


class UsageError(VTTError):
    """An operation was applied to an object it does not belong to."""


class FormatError(VTTError):
    """Malformed dataset or probability-matrix file."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class PoolExhausted(VTTError):
    """No questions remain in the pool."""


class SpecError(VTTError):
    """Synthetic MuE spec does not cover the requested question."""


class MissingEntryError(VTTError, LookupError):
    """A (sample, concept) pair is absent from a probability matrix."""


class AdapterError(VTTError):
    """An external answer source failed (timeout, bad reply, dead process)."""

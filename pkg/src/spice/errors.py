"""Exception taxonomy shared across the package."""


class SpiceError(Exception):
    """Base class for all package errors."""


class ValidationError(SpiceError):
    """Invalid argument, configuration, or domain-type invariant violation."""


class MaskError(ValidationError):
    """A mask is empty, dots-only, or dimensionally inconsistent."""


class CodecError(SpiceError):
    """PNG stream is malformed or uses an unsupported format."""


class ProjectError(SpiceError):
    """Project directory is missing, incomplete, or schema-incompatible."""


class BackendError(SpiceError):
    """A denoising or embedding backend failed."""

    retryable = False


class BackendUnavailable(BackendError):
    """Transport-level failure; retrying may succeed."""

    retryable = True


class ContractViolation(BackendError):
    """A backend response broke the wire/shape contract."""


class MetricUndefined(SpiceError):
    """A metric has no value for this input (e.g. zero direction vector)."""


class CancelledError(SpiceError):
    """An in-flight edit step was cancelled before completion."""

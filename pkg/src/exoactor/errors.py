"""Exception taxonomy shared across the pipeline."""


class ExoError(Exception):
    """Base class for all pipeline errors."""


class InvalidArgument(ExoError, ValueError):
    """A caller-supplied argument violates an operation precondition."""


class SyncError(ExoError):
    """Motion streams disagree in duration beyond the pairing tolerance."""


class DecompositionError(ExoError):
    """Backend paragraph did not yield an acceptable number of sub-actions."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class FormatError(ExoError):
    """Backend response violated the mandated single-paragraph format."""


class GroundingError(ExoError):
    """A generated description introduced objects absent from the scene."""

    def __init__(self, message: str, nouns: list[str] | None = None):
        super().__init__(message)
        self.nouns = nouns or []


class MissingStateError(ExoError):
    """Initial-state scene summary required but absent."""


class TemplateError(ExoError):
    """A prompt template slot is unresolved or unfillable."""

    def __init__(self, message: str, slot: str = ""):
        super().__init__(message)
        self.slot = slot


class GatewayError(ExoError):
    """A remote generation backend failed or timed out."""


class InputError(ExoError):
    """Malformed or empty input handed to a generation backend."""


class ArtifactIntegrityError(ExoError):
    """Fetched artifact metadata is internally inconsistent."""


class EstimationError(ExoError):
    """An estimator backend returned unusable output."""

    def __init__(self, message: str, frames: list[int] | None = None):
        super().__init__(message)
        self.frames = frames or []


class TransportError(ExoError):
    """A remote estimator endpoint is unreachable or misbehaving."""


class CodecError(ExoError):
    """Command-frame buffer failed to encode or decode."""

    def __init__(self, message: str, expected: int | None = None, actual: int | None = None):
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class StreamError(ExoError):
    """The frame sink rejected a frame or missed its backpressure deadline."""

    def __init__(self, message: str, frame_index: int | None = None):
        super().__init__(message)
        self.frame_index = frame_index


class ConfigError(ExoError):
    """Pipeline configuration is invalid or missing credentials."""

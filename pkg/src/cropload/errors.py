"""Exception hierarchy shared by all cropload modules."""


class CroploadError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(CroploadError):
    """A file is not a valid container (bad magic, version, or layout)."""


class CorruptionError(CroploadError):
    """Stored data failed an integrity check (CRC, truncation, bounds)."""


class DecodeError(CroploadError):
    """A JPEG stream could not be decoded.

    ``offset`` is the byte position in the stream where parsing failed,
    when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(CroploadError):
    """A configuration document or argument violates its schema."""

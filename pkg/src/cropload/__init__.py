"""cropload: packed JPEG dataset container + crop-decoding data loader."""

__version__ = "0.1.0"

# Container file format version this build reads and writes.
FORMAT_VERSION = 1

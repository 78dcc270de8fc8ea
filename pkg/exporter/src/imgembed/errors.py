"""Exporter failure modes callers are expected to branch on."""


class ImgembedError(Exception):
    """Base class for all exporter-specific errors."""


class MissingCheckpoint(ImgembedError):
    """The requested model checkpoint could not be loaded."""


class UnreadableImage(ImgembedError):
    """An image file exists but cannot be decoded."""

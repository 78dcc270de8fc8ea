"""Exception taxonomy shared across the package.

Every failure mode that callers are expected to branch on gets its own
class; anything else surfaces as a plain ValueError.
"""


class ProtostreamError(Exception):
    """Base class for all package-specific errors."""


class EmptyInput(ProtostreamError):
    """An operation received an empty collection where data is required."""


class DimMismatch(ProtostreamError):
    """Vector or matrix dimensions disagree with the configured space."""


class ZeroVector(ProtostreamError):
    """A vector with (near-)zero norm cannot be projected to the sphere."""


class TooFewClasses(ProtostreamError):
    """A calibration or routing step needs more labeled classes."""


class EmptyCandidates(ProtostreamError):
    """Scoring was requested over an empty candidate set."""


class NoNovelPrototypes(ProtostreamError):
    """Attach scoring was requested while the novel memory is empty."""


class SpecInfeasible(ProtostreamError):
    """A benchmark specification cannot be realised as stated."""


class LengthMismatch(ProtostreamError):
    """Parallel sequences (e.g. predictions and truths) differ in length."""


class UnlabeledSupport(ProtostreamError):
    """A support feature file must carry a label for every record."""


class FeatureFileError(ProtostreamError):
    """Base class for binary feature-file parsing failures."""


class BadMagic(FeatureFileError):
    """The file does not start with the expected magic bytes."""


class BadVersion(FeatureFileError):
    """The file declares an unsupported format version."""


class TruncatedFile(FeatureFileError):
    """The file byte length disagrees with its declared record layout."""

"""Exception hierarchy shared across the toolkit.

Every error the library raises deliberately derives from StrobeError so
callers (and the CLI) can distinguish "rejected input" from genuine bugs.
"""


class StrobeError(Exception):
    """Base class for all errors raised by this package."""


# --- DEX parsing -----------------------------------------------------------

class BadMagic(StrobeError):
    """First 8 bytes are not a dex magic."""


class Truncated(StrobeError):
    """Declared file size exceeds (or disagrees with) the input buffer."""


class OffsetOutOfBounds(StrobeError):
    """A table offset or cross-table index points outside the file."""


class DecodeError(StrobeError):
    """Malformed MUTF-8 string data."""


class StrictDecodeError(DecodeError):
    """Raised in strict mode when a file contains undecodable string entries."""


# --- APK containers --------------------------------------------------------

class NotAZip(StrobeError):
    """Missing end-of-central-directory record."""


class CorruptEntry(StrobeError):
    """CRC mismatch or bad compressed stream for an archive entry."""


class NoDex(StrobeError):
    """Archive contains no classes*.dex entry."""


# --- Datasets and splits ---------------------------------------------------

class BadHeader(StrobeError):
    """Manifest CSV header does not match a known layout."""


class DuplicateId(StrobeError):
    """Repeated sample_id in a manifest."""


class UnknownLabel(StrobeError):
    """Label column value is neither SE nor NOT_SE."""


class UnknownId(StrobeError):
    """Split references a sample_id absent from the corpus."""


class TooSmall(StrobeError):
    """Not enough samples for the requested operation."""


class TooFewFamilies(StrobeError):
    """Operation requires at least two families."""


class Degenerate(StrobeError):
    """No valid family-disjoint split found within the retry budget."""


# --- Learners --------------------------------------------------------------

class SingleClass(StrobeError):
    """Training data contains only one class."""


class BadConfig(StrobeError):
    """Invalid learner configuration."""


# --- Evaluation ------------------------------------------------------------

class EmptyTest(StrobeError):
    """Holdout evaluation needs a non-empty test set."""


class EmptyStream(StrobeError):
    """Prequential evaluation needs a non-empty stream."""


class Empty(StrobeError):
    """Statistic requested over an empty collection."""


# --- Synthetic corpus generation -------------------------------------------

class SpecTooLarge(StrobeError):
    """DexSpec exceeds the 16-bit table limits of the minimal writer."""


class EmptyIdentifiers(StrobeError):
    """A dex needs at least one identifier string."""


class InvalidConfig(StrobeError):
    """SynthConfig field out of range."""

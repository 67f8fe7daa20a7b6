"""Exception types shared across the package."""


class NameThatError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(NameThatError, ValueError):
    """A vector's dimension does not match what the consumer expects."""


class CapacityError(NameThatError, ValueError):
    """The vocabulary cannot grow past the number of decodable indices."""


class SnapshotError(NameThatError, ValueError):
    """A session snapshot is malformed or violates a session invariant."""


class EmbeddingFormatError(NameThatError, ValueError):
    """An embedding-set file is malformed."""


class GenerationError(NameThatError, RuntimeError):
    """A synthetic-set specification could not be satisfied."""

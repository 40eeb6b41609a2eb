"""Exception types shared across the package."""


class RethinkError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfig(RethinkError):
    """A configuration value violates its documented constraints."""


class TransportError(RethinkError):
    """A backend could not be reached after exhausting all retries."""


class BackendError(RethinkError):
    """A backend answered, but outside its contract (bad status, shape, or range)."""


class IngestError(RethinkError):
    """A corpus or triple-store file contains a malformed record."""


class FormatError(RethinkError):
    """A dataset file does not match its documented format."""


class LinkerError(RethinkError):
    """The entity linking service failed."""


class NoPaths(RethinkError):
    """An answer-selection operation received no reasoning paths."""


class EmptyRun(RethinkError):
    """A metric was requested over zero records."""

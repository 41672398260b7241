"""Exception and warning types shared across the toolkit."""


class Error(Exception):
    """Base class for all toolkit errors."""


class ParseError(Error):
    """Malformed input file: bad header, bad value, unsupported layout."""


class TruncationError(ParseError):
    """File body ends before the declared element count."""


class SchemaError(ParseError):
    """Input table is missing required columns."""


class DuplicateKeyError(ParseError):
    """Input table repeats a primary key that must be unique."""


class ValidationError(Error):
    """Loaded values violate a container invariant (non-finite coordinate,
    out-of-range color, non-unit normal)."""


class DomainError(Error):
    """Operation invoked outside its domain: empty cloud, parameter out of
    range, missing attribute required by the requested computation."""


class DegenerateCloudWarning(UserWarning):
    """Geometry was too degenerate for the usual computation and a documented
    fallback was applied."""

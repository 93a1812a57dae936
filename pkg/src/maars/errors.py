"""Exception hierarchy shared by every module."""


class MaarsError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(MaarsError):
    """An input file is malformed or does not follow the expected schema."""


class ValidationError(MaarsError):
    """Well-formed input whose content violates an invariant (bad offsets, duplicate ids)."""


class ConfigurationError(MaarsError):
    """Conflicting or missing options."""


class UnresolvableSpanError(MaarsError):
    """A candidate answer text cannot be located in its context."""


class InvariantError(MaarsError):
    """Internal precondition violated, e.g. a span outside its context."""


class NoAnswerError(MaarsError):
    """Every candidate for an example was dropped before selection."""

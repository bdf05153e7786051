"""Exception hierarchy shared by every module."""


class MMLabError(Exception):
    """Base class for all errors raised by mmlab."""


class ConfigError(MMLabError, ValueError):
    """Invalid parameters, config files or mismatched policy/environment shapes."""


class DomainError(MMLabError, ValueError):
    """An argument lies outside the domain of a mathematical operation."""


class NumericError(MMLabError, ArithmeticError):
    """A computation produced a non-finite value."""


class StateError(MMLabError, RuntimeError):
    """Operation not allowed in the current state (e.g. stepping a finished episode)."""


class FormatError(MMLabError, ValueError):
    """A checkpoint file is malformed or truncated."""


class VersionError(FormatError):
    """A checkpoint was written with an unsupported format version."""

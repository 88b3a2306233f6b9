"""Exception types shared across the package."""


class EvalError(Exception):
    """Base class for every error raised by this package."""


class FormatError(EvalError):
    """An interchange file is malformed or violates its schema."""


class UnsupportedCompressionError(FormatError):
    """A TIFF page uses a compression scheme outside the supported set."""


class ValidationError(EvalError):
    """Input records violate a precondition of evaluation."""


class ConfigError(EvalError):
    """An evaluation configuration is inconsistent or incomplete."""

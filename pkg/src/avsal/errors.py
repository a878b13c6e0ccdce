"""Exception hierarchy shared by all pipeline stages."""


class AvsalError(Exception):
    """Base class for all errors raised by this package."""


class InputError(AvsalError):
    """Missing or insufficient input data (bad directory, too few frames)."""


class FormatError(AvsalError):
    """Input exists but its encoding or layout is not supported."""


class ParameterError(AvsalError, ValueError):
    """An argument violates an operation's precondition."""


class PipelineError(AvsalError):
    """A pipeline stage failed; message names the stage."""

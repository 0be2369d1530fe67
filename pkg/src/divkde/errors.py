"""Exception hierarchy shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its documented domain (bad bandwidth, empty region, ...)."""


class DomainError(ValueError):
    """A mathematical precondition fails (non-finite input, non-integrable tail, ...)."""


class NumericError(RuntimeError):
    """A computation produced non-finite values or failed to converge."""


class ConfigError(ValueError):
    """An experiment configuration is invalid; maps to CLI exit code 2."""


class FitUndefinedError(RuntimeError):
    """A rate fit was requested on data that cannot support one."""

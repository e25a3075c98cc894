"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid argument: bad value, failed invariant, or dimension mismatch."""


class ConfigError(ValueError):
    """Bad run configuration; the message names the offending key."""


class NumericalError(RuntimeError):
    """Numerical failure: norm drift past the guard or a non-converged eigensolve."""

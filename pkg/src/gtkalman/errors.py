"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent dimensions, invalid parameters, or a malformed config file."""


class NumericError(ArithmeticError):
    """A numerical operation failed (non-PD covariance, LP solver breakdown)."""


class EmptyGroupError(ValueError):
    """Raised when a testing group is empty; callers skip the test instead."""


class BudgetExceededError(RuntimeError):
    """A brute-force routine refused to run because the instance is too large."""

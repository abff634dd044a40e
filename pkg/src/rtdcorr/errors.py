"""Exception types shared across the toolkit."""


class ValidationError(ValueError):
    """Bad input data or configuration; maps to exit code 1 in the CLI."""


class NotFoundError(KeyError):
    """A referenced host, city or ISP does not exist."""


class BestlineError(ValidationError):
    """No feasible lower linear bound exists for the given points."""

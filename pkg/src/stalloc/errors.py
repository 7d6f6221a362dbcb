"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(RuntimeError):
    """A numerical integral or root search did not reach its tolerance."""


class ConfigError(ValueError):
    """An experiment configuration failed validation.

    ``problems`` holds one ``(field, message)`` pair per offending field.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        msg = "; ".join(f"{field}: {message}" for field, message in self.problems)
        super().__init__(msg or "invalid configuration")

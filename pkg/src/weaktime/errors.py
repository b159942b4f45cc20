"""Exception and warning classes shared across the package."""


class WeakTimeError(Exception):
    """Base class for all package errors."""


class DomainError(WeakTimeError, ValueError):
    """An argument lies outside the region where a formula is valid."""


class ConvergenceError(WeakTimeError, RuntimeError):
    """A numerical procedure failed to reach its accuracy target."""


class ConfigError(WeakTimeError, ValueError):
    """An experiment configuration failed validation.

    ``problems`` holds every individual complaint so that a bad file is
    reported in one go.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class FarFieldWarning(UserWarning):
    """The initial wavepacket is not well separated from the barrier."""

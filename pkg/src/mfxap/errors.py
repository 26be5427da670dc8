"""Exception types shared by the library and the command line."""


class ConfigurationError(ValueError):
    """Raised for invalid parameters, schemas or dimension mismatches."""


class NumericalError(ArithmeticError):
    """Raised when a computation produces non-finite values.

    ``iteration`` carries the simulation index at which the problem was
    detected, when one is known.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class DivergenceError(NumericalError):
    """An adaptive filter blew up: its weights or error became non-finite."""

    def __init__(self, message, iteration=None, variant=None, mu=None, trial=None):
        super().__init__(message, iteration)
        self.variant = variant
        self.mu = mu
        self.trial = trial

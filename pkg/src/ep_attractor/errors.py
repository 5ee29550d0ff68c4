"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Argument outside the domain of an operation (non-finite, wrong shape, bad n)."""


class DegenerateStateError(ValueError):
    """A state with zero trace or zero norm where a normalizable one is needed."""


class ConfigurationError(ValueError):
    """Malformed passage, integrator or run configuration."""


class NumericalFailure(RuntimeError):
    """Propagation produced a non-finite value.

    ``t`` is the time at which the offending value appeared.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t

"""Exception types raised by the simulator."""


class NPBError(Exception):
    """Base class for all simulator errors."""


class NonNeutralSource(NPBError, ValueError):
    """Poisson source has a nonzero mean, so no periodic potential exists."""


class InvalidIC(NPBError, ValueError):
    """Initial condition violates positivity, the temperature floor or neutrality."""


class InvalidMean(NPBError, ValueError):
    pass


class TemperatureFloorViolated(NPBError):
    """Temperature fell below half the floor; 1/T is no longer safe to evaluate."""


class NumericalAbort(NPBError):
    """A run stopped on a numerical failure.

    ``last_state`` and ``record`` are filled in by :func:`npb.timestepper.run`
    when the failure happens inside a trajectory.
    """

    def __init__(self, message, last_state=None, record=None):
        super().__init__(message)
        self.last_state = last_state
        self.record = record


class StateInvalid(NumericalAbort):
    pass


class PicardDiverged(NumericalAbort):
    pass


class InsufficientSamples(NPBError, ValueError):
    pass


class NonPositiveSample(NPBError, ValueError):
    pass


class ConfigError(NPBError, ValueError):
    pass


class FormatError(NPBError, ValueError):
    pass

class StatusException(Exception):

    OK = 'OK'
    SKIPPED = 'SKIPPED'
    INVALID = 'INVALID'
    ERROR = 'ERROR'
    NOT_CONVERGED = 'NOT_CONVERGED'

    EXIT_CODES = {
        OK: 0,
        SKIPPED: 0,
        INVALID: 2,
        ERROR: 3,
        NOT_CONVERGED: 4,
    }

    def __init__(self, status, message):
        self.status = status
        self.message = message
        super().__init__(self.message)

    @classmethod
    def exit_code(cls, status):
        return cls.EXIT_CODES.get(status, cls.EXIT_CODES[cls.ERROR])


class ConfigError(StatusException):
    """Invalid scenario configuration; `field` is the dotted path of the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(StatusException.INVALID, f'{field}: {message}' if field else message)


class DomainError(StatusException, ValueError):
    """A physical input outside the domain of the model."""

    def __init__(self, message):
        super().__init__(StatusException.ERROR, message)


class SaturationError(DomainError):
    """Measured rate too close to 1/dead_time for the non-paralyzable inversion."""


class FitConvergenceError(StatusException):

    def __init__(self, message, trace=None):
        self.trace = list(trace or [])
        super().__init__(StatusException.NOT_CONVERGED, message)


class RankDeficiencyError(FitConvergenceError):
    """The Jacobian of the fit model has lost rank."""

"""Exception types shared across the package."""


class BregPalmError(Exception):
    """Base class for errors raised by this package."""


class MatrixParseError(BregPalmError):
    """Malformed matrix text file.

    Carries the 1-based line and column of the offending token when known.
    """

    def __init__(self, message, line=None, column=None):
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
            message = message + where
        super().__init__(message)
        self.line = line
        self.column = column


class DomainError(BregPalmError):
    """A point lies outside the domain of a Bregman geometry or objective."""


class ParameterError(BregPalmError, ValueError):
    """A scalar or structural parameter violates its contract."""


class ConfigError(BregPalmError):
    """Invalid run configuration (unknown key, bad type, missing capability)."""


class InadmissibleScheduleError(ConfigError):
    """Inertial bounds violate 2*(alpha1 + alpha2) < rho and no override was given."""


class CapabilityError(ConfigError):
    """A solver variant was requested on a problem lacking the needed subproblem solver."""


class SolverFault(BregPalmError):
    """A block subproblem solver failed at run time.

    Attributes identify the block, outer iteration and last residual so the
    failure can be reported without losing the partial trace.
    """

    def __init__(self, message, block=None, iteration=None, residual=None):
        super().__init__(message)
        self.block = block
        self.iteration = iteration
        self.residual = residual

"""Exception hierarchy.

The three top-level families map onto CLI exit codes: configuration and
parameter problems (2), data problems (3) and numerical failures (4).
"""


class TwoStrainError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TwoStrainError, ValueError):
    exit_code = 2


class DataError(TwoStrainError, ValueError):
    exit_code = 3


class NumericalError(TwoStrainError, ArithmeticError):
    exit_code = 4


# -- parameters / states -------------------------------------------------

class ParameterError(ConfigError):
    """A model parameter violates its admissible range."""

    def __init__(self, field, value, bound):
        self.field = field
        self.value = value
        self.bound = bound
        super().__init__(f"{field}={value!r} violates {bound}")


class NonPositivePopulation(ParameterError):
    pass


class NegativeRate(ParameterError):
    pass


class EpsilonOutOfRange(ParameterError):
    pass


class DegenerateRates(ParameterError):
    """A reproduction-number ratio has a zero denominator."""


class StateError(ConfigError):
    pass


# -- dynamics ------------------------------------------------------------

class StepNotPositive(ConfigError):
    pass


class NonFiniteState(NumericalError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"non-finite state encountered at t={t!r}")


class WindowMisaligned(DataError):
    pass


# -- equilibria / phase ----------------------------------------------------

class OutOfDomain(ConfigError):
    pass


class PreconditionFailed(ConfigError):
    pass


class BisectionStagnated(NumericalError):
    pass


class NoRootInColumn(NumericalError):
    def __init__(self, i2):
        self.i2 = i2
        super().__init__(f"nullcline has no root in column I2={i2!r}")


class OnSwitchingLine(NumericalError):
    pass


class NotSteadyState(ConfigError):
    pass


# -- bifurcation -----------------------------------------------------------

class InvalidAxis(ConfigError):
    pass


# -- fitting / io ----------------------------------------------------------

class IncompleteWindow(DataError):
    pass


class ShareOutOfRange(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ConstraintViolated(ConfigError):
    pass


class IntegrationFailed(NumericalError):
    pass


class ParseError(DataError):
    def __init__(self, path, line, reason):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {reason}")


class NonMonotoneDates(DataError):
    pass


class NegativeCases(DataError):
    pass

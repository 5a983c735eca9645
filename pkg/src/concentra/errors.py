"""Exception types raised across the package."""


class ConcentraError(Exception):
    """Base class for every error raised by concentra."""


class DimensionMismatch(ConcentraError, ValueError):
    pass


class RankDeficient(ConcentraError, ValueError):
    pass


class UnsupportedDual(ConcentraError, TypeError):
    """The space has no registered closed-form support function."""


class NoGradient(ConcentraError, TypeError):
    pass


class UnsupportedBody(ConcentraError, TypeError):
    """Uniform sampling is only available for l_p balls and the cube."""


class MeanNearZero(ConcentraError, ArithmeticError):
    pass


class NonFinite(ConcentraError, ArithmeticError):
    pass


class DegenerateDistribution(ConcentraError, ArithmeticError):
    pass


class HeavyTail(ConcentraError, ValueError):
    """Negative moment too deep for plain Monte Carlo (infinite variance)."""


class QuadratureFail(ConcentraError, ArithmeticError):
    pass


class CardinalityExplosion(ConcentraError, ValueError):
    pass


class CoverageFail(ConcentraError, RuntimeError):
    pass


# the dvoretzky module reports net construction failures under this name
NetFailure = CoverageFail


class VacuousBound(ConcentraError, ValueError):
    pass


class SpecError(ConcentraError, ValueError):
    """Malformed space or measure specification string."""

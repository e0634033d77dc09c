"""Exception hierarchy.

Numerical failures derive from :class:`NumericalFailure` so the command
line front end can map them to a single exit code; precondition
violations that stem from bad configuration derive from
:class:`ConfigError`.
"""


class BergvarError(Exception):
    """Base class for all package errors."""


class ConfigError(BergvarError, ValueError):
    """Invalid parameters or configuration."""


class NumericalFailure(BergvarError, ArithmeticError):
    """A computation could not be carried out to the required accuracy."""


class DegreeTooHigh(ConfigError):
    pass


class NonInjectiveFiber(NumericalFailure):
    pass


class InversionDiverged(NumericalFailure):
    pass


class PointOutsideFiber(NumericalFailure):
    pass


class DegenerateBoundary(NumericalFailure):
    pass


class RankDeficient(NumericalFailure):
    pass


class StencilInconsistent(NumericalFailure):
    pass


class ProbeTooCloseToBoundary(ConfigError):
    pass


class GridTouchesBoundary(ConfigError):
    pass


class AuxiliaryGramSingular(NumericalFailure):
    pass


class WeightNotStrictlySubharmonic(ConfigError):
    pass


class DegenerateWeight(NumericalFailure):
    pass

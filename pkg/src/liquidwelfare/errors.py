"""Exception hierarchy shared by every module."""


class LiquidWelfareError(Exception):
    """Base class for all package errors."""


class InstanceError(LiquidWelfareError, ValueError):
    """The instance (or a piece of it) is malformed."""


class NegativeValue(InstanceError):
    pass


class NonMonotoneValuation(InstanceError):
    pass


class ConcavityFlagViolated(InstanceError):
    pass


class EmptyInstance(InstanceError):
    pass


class InfeasibleAllocation(LiquidWelfareError, ValueError):
    pass


class NotAdditive(LiquidWelfareError, TypeError):
    """Mechanism requires single-number per-unit values."""


class ResolutionTooSmall(LiquidWelfareError, ValueError):
    pass


class TooFewBidders(LiquidWelfareError, ValueError):
    pass


class RuleEvaluationFailed(LiquidWelfareError, RuntimeError):
    pass


class NonConvergentQuadrature(LiquidWelfareError, RuntimeError):
    pass


class NumericalStall(LiquidWelfareError, RuntimeError):
    pass


class ParseError(LiquidWelfareError, ValueError):
    pass


class UnknownMechanism(LiquidWelfareError, KeyError):
    pass

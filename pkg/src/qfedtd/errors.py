"""Exception types raised by model validation, simulation, and analysis."""


class QFedTDError(ValueError):
    """Base class for all errors raised by this package."""


class BadDims(QFedTDError):
    """Array arguments have inconsistent or unsupported shapes."""


class DimMismatch(QFedTDError):
    """A parameter vector does not match the feature dimension."""


class NonStochasticRow(QFedTDError):
    """A transition-matrix row does not sum to one."""


class NegativeProbability(QFedTDError):
    """A transition matrix contains a negative entry."""


class GammaOutOfRange(QFedTDError):
    """Discount factor outside the open interval (0, 1)."""


class ReducibleChain(QFedTDError):
    """The chain is not irreducible; no unique stationary distribution."""


class PeriodicChain(QFedTDError):
    """The chain is irreducible but periodic."""


class SingularSystem(QFedTDError):
    """The projected fixed-point system is numerically singular."""


class NotSymmetric(QFedTDError):
    """A matrix expected to be symmetric is not."""


class NonFiniteInput(QFedTDError):
    """An input vector contains NaN or infinity."""


class Divergence(QFedTDError):
    """Iterates exceeded the divergence guard; step size too large."""


class MixingNotReached(QFedTDError):
    """Total-variation mixing did not reach the target threshold."""


class HorizonTooShort(QFedTDError):
    """Iteration horizon below the minimum the bound requires."""


class InsufficientPoints(QFedTDError):
    """Too few data points for the requested regression."""

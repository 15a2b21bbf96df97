"""Exception types raised by generator validation, solvers, and q-domain checks."""


class QThermoError(Exception):
    """Base class for every error raised by this package."""


# -- model / generator input ------------------------------------------------

class NegativeRate(QThermoError):
    """An off-diagonal transition rate is negative."""


class NonFinite(QThermoError):
    """A rate or probability is NaN or infinite."""


class TooSmall(QThermoError):
    """Fewer than two states."""


class InvalidDistribution(QThermoError):
    """A probability vector violates the simplex invariants."""


class ModelFileError(QThermoError):
    """A model file does not conform to the JSON schema."""


# -- solvers and dynamics ---------------------------------------------------

class IntegrationFailure(QThermoError):
    """Time integration lost probability mass or produced negative entries."""


class NotIrreducible(QThermoError):
    """The support graph is not strongly connected; no unique stationary state."""


class SolveFailure(QThermoError):
    """Linear algebra failed beyond the expected single null direction."""


class GridTooCoarse(QThermoError):
    """Finite-difference residuals are dominated by truncation at this grid."""


# -- structural preconditions -----------------------------------------------

class NotReversible(QThermoError):
    """Some edge exists in only one direction (w_ij > 0 but w_ji = 0)."""


class NotDetailedBalanced(QThermoError):
    """pi_i w_ij != pi_j w_ji beyond tolerance on some edge."""


# -- q-domain ---------------------------------------------------------------

class DomainError(QThermoError):
    """An argument lies outside the domain of a q-deformed formula."""


class SupportError(QThermoError):
    """p_i > 0 where the reference distribution vanishes."""


class NumericalInconsistency(QThermoError):
    """Two algebraically identical evaluations disagree beyond tolerance."""

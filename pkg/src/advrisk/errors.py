"""Exception hierarchy for advrisk.

Every error raised on purpose by this package derives from
:class:`AdvRiskError`, so callers can catch one base class.  The CLI maps
subfamilies onto exit codes (config 2, budget 3, certification 4).
"""

from __future__ import annotations


class AdvRiskError(Exception):
    """Base class for all advrisk errors."""


class DomainError(AdvRiskError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class UnknownLossError(AdvRiskError, KeyError):
    """A loss name does not resolve against the registry."""


class UndecidableError(AdvRiskError):
    """The requested predicate cannot be decided from the given data.

    Raised e.g. when asked whether a non-convex tabulated loss is
    consistent: the definition quantifies over all distributions and the
    table alone cannot settle it, so we refuse to guess.
    """


class NumericError(AdvRiskError):
    """A numeric routine failed to converge or violated a checked bound.

    Carries the best bracket found so far in :attr:`bracket` when the
    failure came from a scan/refinement step.
    """

    def __init__(self, message: str, bracket: tuple | None = None):
        super().__init__(message)
        self.bracket = bracket


class BudgetError(AdvRiskError):
    """Problem size exceeds the configured computational budget."""


class SolverInfeasibleError(AdvRiskError):
    """A solver reported infeasibility on a problem that is feasible by

    construction; this signals an internal bug, not a user error.
    """


class PreconditionError(AdvRiskError):
    """A documented precondition of an operation does not hold."""


class NoWitnessError(AdvRiskError):
    """No inconsistency witness exists in the requested regime."""


class CertificationError(AdvRiskError):
    """A certification check failed where a pass was required."""


class ConfigError(AdvRiskError):
    """An experiment configuration file is missing, malformed or invalid."""


class AdvRiskWarning(UserWarning):
    """Base warning category for advisory (warn-and-proceed) situations."""

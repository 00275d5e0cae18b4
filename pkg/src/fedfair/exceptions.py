"""Exception hierarchy for scenario validation and computation preconditions."""


class FedFairError(Exception):
    """Base class for all errors raised by this package."""


class ScenarioError(FedFairError):
    """A scenario violates a structural invariant."""


class EmptyCoalition(ScenarioError):
    """A coalition must contain at least one player."""


class DuplicatePlayerId(ScenarioError):
    """Player ids within a coalition must be distinct."""


class NonPositiveSamples(ScenarioError):
    """Sample counts must be positive and finite."""


class NegativeVariance(ScenarioError):
    """Population parameters must be nonnegative and finite."""


class TargetNotInCoalition(FedFairError):
    """The requested target player is not a member of the coalition."""


class WeightDomainMismatch(FedFairError):
    """A weight vector must cover exactly the coalition's player ids."""


class NonUnitSum(FedFairError):
    """Combination weights must sum to one (relative tolerance 1e-9)."""


class DegenerateParams(FedFairError):
    """Both noise and bias are zero: every unit-sum weighting is optimal,
    so no single optimum is defined."""


class ZeroDenominator(FedFairError):
    """An error ratio was requested against a player with zero error."""


class UndefinedBound(FedFairError):
    """The egalitarian bound needs noise > 0 and bias > 0 to be defined."""


class NonIntegerSamples(FedFairError):
    """Simulation draws individual samples, so sample counts must be integers."""


class InvalidNoiseList(FedFairError):
    """A per-player noise list must match the coalition and average to the
    population noise level."""

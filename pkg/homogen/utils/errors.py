"""Exception hierarchy for the homogenization engine.

Every error carries the CLI exit code of its category so the command line
and the HTTP layer can map failures without inspecting messages.
"""


class HomogenizationError(Exception):
    exit_code = 1


class ValidationFailure(HomogenizationError):
    exit_code = 2


class SolverFailure(HomogenizationError):
    exit_code = 3


class AcceptanceFailure(HomogenizationError):
    exit_code = 4


# kernel
class NonUnitMass(ValidationFailure):
    pass


class NegativeDensity(ValidationFailure):
    pass


class UnboundedSupport(ValidationFailure):
    pass


# cell / correctors / effective
class CoercivityViolation(ValidationFailure):
    pass


class AlphaOutOfRange(ValidationFailure):
    pass


class ScheduleMismatch(ValidationFailure):
    pass


class NonZeroMean(ValidationFailure):
    pass


class EpsilonNonPositive(ValidationFailure):
    pass


class NullSpaceDimension(SolverFailure):
    pass


class NonPositiveDensity(SolverFailure):
    pass


class CompatibilityViolation(SolverFailure):
    pass


class SolverBreakdown(SolverFailure):
    pass


class NotPositiveDefinite(AcceptanceFailure):
    pass


# simulate
class GridMismatch(ValidationFailure):
    pass


class CheckpointMismatch(ValidationFailure):
    pass


class CFLViolation(ValidationFailure):
    pass


class NotPSD(ValidationFailure):
    pass


class NonFiniteValue(SolverFailure):
    pass


# harness
class IoFailure(SolverFailure):
    pass


class OracleDisagreement(AcceptanceFailure):
    pass


class ConvergenceCheckFailed(AcceptanceFailure):
    pass

"""Domain errors shared across all plaza modules.

Every error carries a stable ``name`` (the class name) that the HTTP layer
and the CLI put on the wire, plus a coarse ``category`` used to pick a
transport status code.
"""


class PlazaError(Exception):
    """Base class for all domain errors."""

    #: one of "validation", "not_found", "conflict", "storage"
    category = "validation"

    @property
    def name(self) -> str:
        return type(self).__name__


class UnknownParticipant(PlazaError):
    category = "not_found"


class UnknownStatement(PlazaError):
    category = "not_found"


class NotFound(PlazaError):
    category = "not_found"


class EmptyMatrix(PlazaError):
    pass


class DegenerateInput(PlazaError):
    pass


class MissingGroupAssignment(PlazaError):
    pass


class LifecycleViolation(PlazaError):
    category = "conflict"


class TooEarly(PlazaError):
    category = "conflict"


class WindowExpired(PlazaError):
    category = "conflict"


class InsufficientEligible(PlazaError):
    pass


class InfeasibleTargets(PlazaError):
    """Raised when a quota exceeds the available candidates.

    Carries the max marginal deviation the best-effort fill achieved so the
    caller can see how far off the sample was instead of silently getting a
    worse one.
    """

    def __init__(self, message: str, achieved_deviation: float):
        super().__init__(message)
        self.achieved_deviation = achieved_deviation


class BudgetExhausted(PlazaError):
    category = "conflict"


class DuplicateParticipant(PlazaError):
    category = "conflict"


class NoRelevantNodes(PlazaError):
    pass


class InsufficientCandidates(PlazaError):
    pass


class UnknownMember(PlazaError):
    category = "not_found"


class InvalidSpec(PlazaError):
    pass


class StorageFailure(PlazaError):
    category = "storage"


class GuardRejected(PlazaError):
    """A write was refused by the deliberation state guard."""

    category = "conflict"

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason

    @property
    def name(self) -> str:
        # surface the guard reason (StateNotActive / Expired) on the wire
        return self.reason


class CorruptLog(PlazaError):
    category = "storage"

    def __init__(self, message: str, sequence_number: int | None = None):
        super().__init__(message)
        self.sequence_number = sequence_number

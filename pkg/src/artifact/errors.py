"""Exception types shared across modules."""


class ArtifactError(Exception):
    """Base class for all errors raised by the package."""


class ConfigError(ArtifactError, ValueError):
    """Malformed user input (bad weight, bad rational string, ...)."""


class InvariantViolation(ArtifactError):
    """An internal consistency check failed; indicates a bug, not user error."""


class PrecisionExhausted(ArtifactError):
    """An interval comparison could not be decided below the precision cap."""


class DimensionTooLarge(ArtifactError, ValueError):
    pass


class SingularMatrix(ArtifactError, ValueError):
    pass


class DimensionMismatch(ArtifactError, ValueError):
    pass


class PreconditionViolated(ArtifactError, ValueError):
    pass


class SearchBudgetExceeded(ArtifactError):
    pass


class UnsupportedKind(ArtifactError, ValueError):
    pass


class MalformedMove(ArtifactError, ValueError):
    pass


class IllegalMove(ArtifactError):
    def __init__(self, clause: str, detail: str = ""):
        super().__init__(f"{clause}: {detail}" if detail else clause)
        self.clause = clause


class BetaTooLarge(ConfigError):
    pass


class LedgerInconsistent(InvariantViolation):
    pass


class UniquenessViolated(InvariantViolation):
    pass


class CellBudgetViolated(InvariantViolation):
    pass


class RectangleHit(ArtifactError):
    def __init__(self, v, j, n, detail: str = ""):
        super().__init__(f"outcome hits dangerous rectangle v={v} cell={j} level={n} {detail}".rstrip())
        self.v, self.j, self.n = v, j, n


class SandwichViolated(InvariantViolation):
    pass


class ZeroFiberCoordinate(ArtifactError, ValueError):
    pass


class NoLegalBall(ArtifactError):
    """Bob has no legal ball on the candidate net; Alice wins by default."""

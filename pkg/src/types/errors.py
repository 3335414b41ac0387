from typing import Any


class EngineError(Exception):
    """Base class of every error raised by the engine."""


class UsageError(EngineError):
    """Bad flags, unknown fixture names or missing document sections."""


class ValidationFailure(EngineError):
    """A mathematical check failed.

    Attributes:
        witness (dict[str, Any]): Minimal data reproducing the failure (basis triple, degree,
            word, class...), rendered by the CLI before exiting with status 2.
    """

    def __init__(self, message: str, **witness: Any):
        super().__init__(message)
        self.message = message
        self.witness = witness

    def __str__(self) -> str:
        if not self.witness:
            return self.message
        details = ", ".join(f"{key}={value}" for key, value in self.witness.items())
        return f"{self.message} ({details})"


class ShapeMismatch(ValidationFailure):
    pass


class SquareNonzero(ValidationFailure):
    pass


class NotChainMap(ValidationFailure):
    pass


class FiltrationNotRespected(ValidationFailure):
    pass


class DegreeWindowExceeded(ValidationFailure):
    pass


class SkewFail(ValidationFailure):
    pass


class JacobiFail(ValidationFailure):
    pass


class LeibnizFail(ValidationFailure):
    pass


class WrongDegree(ValidationFailure):
    pass


class NotMaurerCartan(ValidationFailure):
    pass


class NotAnIdeal(ValidationFailure):
    pass


class NotLieMorphism(ValidationFailure):
    pass


class NotAModule(ValidationFailure):
    pass


class NotCoalgebraMorphism(ValidationFailure):
    pass


class CutoffExceeded(ValidationFailure):
    pass


class AxiomFail(ValidationFailure):
    pass


class CocycleFail(ValidationFailure):
    pass


class FlatnessFail(ValidationFailure):
    pass


class HypothesisFail(ValidationFailure):
    pass


class WindowOverflow(ValidationFailure):
    """A product of polynomial forms left the weight window of the resolution."""


class FactorFail(ValidationFailure):
    pass


class TrivializationFail(ValidationFailure):
    pass


class NonScalarAction(ValidationFailure):
    pass

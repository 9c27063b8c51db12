"""Semantic exception hierarchy shared across the package."""


class MaxbiasError(Exception):
    """Base error for this package."""


class DomainError(MaxbiasError, ValueError):
    """An argument violates a documented precondition (range, sign, shape)."""


class BracketError(MaxbiasError):
    """A root bracket does not contain a sign change."""


class NumericalError(MaxbiasError):
    """A quadrature, root find or optimization failed to converge."""


class UnsupportedOperationError(MaxbiasError):
    """The operation is undefined for this loss family (e.g. score of a step loss)."""


class ConditionError(MaxbiasError):
    """An applicability hypothesis of a dominance/bound result fails for the inputs."""


class DegenerateEfficiencyError(NumericalError):
    """The score-derivative expectation is too close to zero for a stable variance."""


class TargetRangeError(DomainError):
    """A tuning target lies outside the attainable range.

    Carries the attainable open interval so callers can report it.
    """

    def __init__(self, target: float, attainable: tuple[float, float]):
        self.target = target
        self.attainable = attainable
        lo, hi = attainable
        super().__init__(
            f"target {target:g} is unattainable; attainable range is ({lo:g}, {hi:g})"
        )

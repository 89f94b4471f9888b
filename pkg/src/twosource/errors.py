"""Exception hierarchy shared by every module of the package."""


class TwoSourceError(Exception):
    """Base class for all package errors."""


# numerics
class QuadratureError(TwoSourceError, ArithmeticError):
    pass


class NonConvergence(QuadratureError):
    pass


class DomainTooSmall(QuadratureError):
    pass


class StepUnderflow(TwoSourceError, ValueError):
    pass


# optics / state
class InvalidAperture(TwoSourceError, ValueError):
    pass


class InvalidSource(TwoSourceError, ValueError):
    pass


class DegenerateSource(TwoSourceError, ValueError):
    pass


class InvalidCoherence(TwoSourceError, ValueError):
    pass


# qfi
class AssumptionViolation(TwoSourceError, ValueError):
    """Orthogonality preconditions of the lemma failed.

    ``violations`` maps a relation name (e.g. ``"<d1|0>"``) to the size of
    the offending inner product relative to the vector norms.
    """

    def __init__(self, violations: dict):
        self.violations = dict(violations)
        detail = ", ".join(f"{k}={v:.3e}" for k, v in self.violations.items())
        super().__init__(f"lemma assumptions violated: {detail}")


class DivergentPerDetected(TwoSourceError, ArithmeticError):
    pass


# oracle
class RankCollapse(TwoSourceError, ArithmeticError):
    pass


class UnsupportedDerivative(TwoSourceError, ArithmeticError):
    pass


class DerivativeMismatch(TwoSourceError, ArithmeticError):
    pass


# measurement
class ApertureNotGaussian(TwoSourceError, ValueError):
    pass


class TailTooHeavy(TwoSourceError, ArithmeticError):
    pass


# loss bound
class UnnormalizedPSF(TwoSourceError, ValueError):
    pass


class ParsevalMismatch(TwoSourceError, ArithmeticError):
    pass


# cli
class ConfigError(TwoSourceError, ValueError):
    """Invalid sweep configuration; ``problems`` maps field -> message."""

    def __init__(self, problems: dict):
        self.problems = dict(problems)
        detail = "; ".join(f"{k}: {v}" for k, v in self.problems.items())
        super().__init__(f"invalid configuration: {detail}")

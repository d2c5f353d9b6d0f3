"""Exception hierarchy.

Every error raised by the package derives from :class:`ResgapError`; the
``exit_code`` attribute is what the command-line front end returns.
"""


class ResgapError(Exception):
    exit_code = 1


class ValidationError(ResgapError, ValueError):
    """An input violates a documented invariant."""

    exit_code = 2


class DuplicateAlpha(ValidationError):
    pass


class PoleEvaluation(ValidationError):
    pass


class RootNotBracketed(ResgapError):
    exit_code = 5


class NonPositiveRho(ValidationError):
    pass


class SingularSystem(ResgapError):
    exit_code = 5


class InfeasibleLayout(ResgapError):
    exit_code = 3


class GammaTooLarge(ResgapError):
    exit_code = 3


class RoundtripMismatch(ResgapError):
    exit_code = 5

    def __init__(self, message, index=None, deviation=None):
        super().__init__(message)
        self.index = index
        self.deviation = deviation


class UnresolvedPassage(ValidationError):
    pass


class PassageExceedsClearance(ValidationError):
    pass


class NoConvergence(ResgapError):
    exit_code = 4

    def __init__(self, message, best_residual=None, partial=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.partial = partial


class BracketingViolation(ResgapError):
    """Min-max enclosure N <= theta <= D failed; indicates a solver bug."""

    exit_code = 5

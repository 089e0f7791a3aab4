"""Exception hierarchy shared by all islab modules."""


class IslabError(Exception):
    """Base class for errors raised by islab."""


class InvalidArgument(IslabError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(IslabError, ValueError):
    """An operation was requested outside the domain where it is defined."""


class PreconditionError(IslabError, ValueError):
    """A hypothesis required by a verifier does not hold for the given input."""


class SingularResolvent(IslabError, ArithmeticError):
    """The resolvent was requested at (numerically) a point of the spectrum."""


class NumericFailure(IslabError, ArithmeticError):
    """A numerical routine did not converge; ``partial`` holds what was computed."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class UnsupportedModel(IslabError, TypeError):
    """The operation is not available for this kind of operator model."""


class InvariantViolation(IslabError, AssertionError):
    """A structural invariant that should hold by construction was found broken."""


class StepInstability(IslabError, ArithmeticError):
    """The time integrator produced an implausible jump; ``partial`` holds the run so far."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial

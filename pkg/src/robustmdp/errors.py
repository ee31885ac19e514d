"""Exception hierarchy shared by all solver modules."""


class RobustMdpError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(RobustMdpError, ValueError):
    """A model violates one of its structural invariants."""


class NumericalFailure(RobustMdpError, ArithmeticError):
    """The LP basis became singular or the solution failed its feasibility check."""


class EmptyUncertainty(RobustMdpError):
    """An uncertainty polytope has no feasible point."""


class IterationCapExceeded(RobustMdpError):
    """An iterative solver hit its iteration cap before converging.

    ``partial`` holds the best result computed so far, when one exists.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class IterationCapWarning(RuntimeWarning):
    """Emitted by robust policy iteration when it stops at the iteration cap."""


class ActionMismatch(RobustMdpError, ValueError):
    """Two paired states do not share the same enabled actions."""


class InvalidLayout(RobustMdpError, ValueError):
    """A Frozen Lake layout is malformed."""


class FormatError(ModelError):
    """A model or policy file does not follow the JSON schema."""

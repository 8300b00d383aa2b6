"""Error taxonomy shared by all modules.

Exit-code mapping used by the command line driver:

* :class:`PreconditionError` and subclasses -> exit status 2
* :class:`DivergenceError`                  -> exit status 3
"""


class FrobflatError(Exception):
    """Base class for all library errors."""


class ShapeError(FrobflatError):
    """Dimension or degree-cap mismatch between operands."""


class PreconditionError(FrobflatError):
    """An operation's stated precondition does not hold for the inputs."""


class SingularityError(PreconditionError):
    """A linear part / Jacobian / pivot is numerically singular.

    Carries the offending singular value in ``singular_value`` when known.
    """

    def __init__(self, message, singular_value=None):
        super().__init__(message)
        self.singular_value = singular_value


class ResolutionError(PreconditionError):
    """A grid does not carry enough samples for the requested estimator."""


class DomainShrinkError(PreconditionError):
    """The requested domain radius is not admissible.

    ``feasible_radius`` carries the largest radius found to work.
    """

    def __init__(self, message, feasible_radius=None):
        super().__init__(message)
        self.feasible_radius = feasible_radius


class DivergenceError(FrobflatError):
    """An iterative solver failed to contract within its iteration cap.

    ``ratios`` carries the measured per-step contraction ratios.
    """

    def __init__(self, message, ratios=None):
        super().__init__(message)
        self.ratios = list(ratios) if ratios is not None else []


class StageError(FrobflatError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause

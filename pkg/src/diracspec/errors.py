"""Exception hierarchy.

Every error raised by the library derives from :class:`DiracSpecError`. The CLI
maps the three top-level families onto exit codes (config 2, numeric 3,
budget 4).
"""


class DiracSpecError(Exception):
    pass


class ConfigError(DiracSpecError, ValueError):
    pass


class ModelError(DiracSpecError, ValueError):
    pass


class AllMinorsZero(ModelError):
    pass


class EndpointDataUnavailable(ModelError):
    pass


class NumericalError(DiracSpecError):
    pass


class QuadratureFailure(NumericalError):
    pass


class DegenerateFit(NumericalError):
    pass


class DomainError(NumericalError, ValueError):
    pass


class StepSizeUnderflow(NumericalError):
    pass


class OverflowGuard(NumericalError):
    pass


class TruncationCapReached(NumericalError):
    pass


class MethodUnavailable(NumericalError):
    pass


class SectorViolation(NumericalError, ValueError):
    pass


class BoundaryZero(NumericalError):
    pass


class PhaseTrackingFailure(NumericalError):
    pass


class ChainConstructionFailure(NumericalError):
    pass


class BudgetExceeded(DiracSpecError):
    """Raised when a search exhausts its work budget.

    ``partial`` carries whatever was computed before the budget ran out.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial

"""Exception hierarchy.

Every numerical failure raises a subclass of :class:`SFMaslovError`; the ones
that concern a specific parameter value carry it in ``where``.
"""


class SFMaslovError(Exception):
    def __init__(self, message="", where=None, margin=None):
        super().__init__(message)
        self.where = where
        self.margin = margin


class DimensionMismatch(SFMaslovError, ValueError):
    pass


class NotSymmetric(SFMaslovError, ValueError):
    pass


class NumericallyAmbiguous(SFMaslovError):
    """A rank decision fell inside the guard band around the rank cutoff."""


class NotAGraph(SFMaslovError):
    pass


class NotLagrangian(SFMaslovError):
    pass


class UnitarityFailure(NotLagrangian):
    pass


class NotClosed(SFMaslovError):
    pass


class RefinementExhausted(SFMaslovError):
    pass


class EndpointNotTransverse(SFMaslovError):
    pass


class TransversalityViolated(SFMaslovError):
    pass


class ParityViolation(SFMaslovError):
    pass


class NotIsotropic(SFMaslovError):
    pass


class NotClean(SFMaslovError):
    pass


class NotNested(SFMaslovError):
    pass


class EmptyIsotropic(SFMaslovError):
    pass


class SingularOperator(SFMaslovError):
    pass


class SingularEndpoint(SingularOperator):
    pass


class NonIsolatedSingularity(SFMaslovError):
    pass


class DegenerateCrossing(SFMaslovError):
    pass


class BranchAmbiguity(SFMaslovError):
    pass


class CertificateFailure(SFMaslovError):
    pass


class SuspensionBudgetExceeded(SFMaslovError):
    pass


class TransversalityLost(SFMaslovError):
    pass


class AmbientTooSmall(SFMaslovError):
    def __init__(self, message="", where=None, margin=None, padding=None):
        super().__init__(message, where, margin)
        self.padding = padding


class NewtonDiverged(SFMaslovError):
    pass

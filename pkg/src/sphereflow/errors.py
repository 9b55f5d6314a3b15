"""Exception types shared across the package."""


class SphereFlowError(Exception):
    """Base class for all sphereflow errors."""


class TooFewVertices(SphereFlowError):
    """Curve has fewer vertices than the discrete stencils can support."""


class DegenerateSegment(SphereFlowError):
    """Two consecutive vertices coincide (zero-length segment)."""


class CoincidentPoints(SphereFlowError):
    """A chord was requested between two (numerically) identical points."""


class NotSimple(SphereFlowError):
    """The curve self-intersects."""


class SelfIntersection(NotSimple):
    """A flow step detected loss of embeddedness."""


class StepTooLarge(SphereFlowError):
    """Requested time step exceeds the stability/accuracy cap."""


class Degenerate(SphereFlowError):
    """The evolving curve collapsed below the resolvable length floor."""


class NonConvergent(SphereFlowError):
    """The flow reached t_max without a classifiable outcome."""


class InsufficientData(SphereFlowError):
    """Not enough samples/records for the requested fit."""


class NotAdmissible(SphereFlowError):
    """No barrier parameter up to the search cap certifies the curve."""


class DomainError(SphereFlowError):
    """Argument outside the mathematical domain of the function."""


class PreconditionViolation(SphereFlowError):
    """A documented precondition of the operation does not hold."""


class ConfigParseError(SphereFlowError):
    """Run configuration missing, malformed, or out of range."""


class MissingArtifacts(SphereFlowError):
    """Run directory lacks the files needed for verification."""


class RunDirLocked(SphereFlowError):
    """Another process owns the run directory."""

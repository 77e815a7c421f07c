"""Exception hierarchy for curveflow."""


class CurveFlowError(Exception):
    """Base class for all curveflow errors."""


class DegenerateEdge(CurveFlowError):
    """A polygon edge has zero length."""


class FoldedVertex(CurveFlowError):
    """Adjacent edge tangents are antiparallel, so the nodal tangent is undefined."""


class OrientationError(CurveFlowError):
    """The vertex order is not counterclockwise (signed area not positive)."""


class NotPositiveDefinite(CurveFlowError):
    """Cholesky factorization failed; the matrix is not positive definite."""


class SingularBorderedSystem(CurveFlowError):
    """The bordered zero-mean response system is singular."""


class ZeroGeometricSav(CurveFlowError):
    """The geometric auxiliary variable hit zero; the reduced residual is undefined."""


class NewtonDivergence(CurveFlowError):
    """The reduced Newton iteration did not converge."""


class SingularJacobian(CurveFlowError):
    """The reduced Newton Jacobian is singular."""


class DegenerateUpdate(CurveFlowError):
    """A node update produced a polygon that violates the curve invariants."""


class DissipationViolation(CurveFlowError):
    """A modified-energy dissipation inequality failed beyond round-off slack."""


class UnknownCurveKind(CurveFlowError):
    """Requested initial curve kind is not registered."""


class InvalidOverride(CurveFlowError):
    """A flow configuration or preset override is inconsistent."""


class InvalidRunSpec(CurveFlowError):
    """A batch run specification is inconsistent."""


class MismatchedSweep(CurveFlowError):
    """Time-step sweep values do not halve successively."""

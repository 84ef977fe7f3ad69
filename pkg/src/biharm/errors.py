"""Exception types shared across the package."""


class GeometryError(Exception):
    """Base class for all errors raised by this package."""


class PointOutsideGuard(GeometryError):
    """A point is too close to the chart boundary for the requested stencil."""


class NonFiniteValue(GeometryError):
    """A scalar field returned a non-finite value."""


class DegenerateBox(GeometryError):
    """The guarded interior of a chart box is empty."""


class NonOrthonormalFrame(GeometryError):
    """A frame failed the orthonormality check for its metric."""


class ToleranceExceeded(GeometryError):
    """A verification identity exceeded its tolerance.

    Carries the name of the worst identity, the offending point and the full
    report in ``identity``, ``point`` and ``report``.
    """

    def __init__(self, message, identity=None, point=None, report=None):
        super().__init__(message)
        self.identity = identity
        self.point = point
        self.report = report


class DegenerateImmersion(GeometryError):
    """The differential of a parametrized surface has rank < 2."""


class NotCMC(GeometryError):
    """Mean curvature varies beyond tolerance where a constant is required."""


class NotUmbilic(GeometryError):
    """The shape operator is not a multiple of the identity."""


class SingularCoefficient(GeometryError):
    """An ODE coefficient is evaluated inside its singular margin."""


class ImmediateSingularity(GeometryError):
    """Initial data for the angle ODE violates a singularity margin."""


class OutOfProfile(GeometryError):
    """A query point lies outside the integrated angle profile."""


class EmptyRange(GeometryError):
    """A scan interval is empty or under-sampled."""


class SingularProfile(GeometryError):
    """An angle profile is unusable for building a warped construction."""

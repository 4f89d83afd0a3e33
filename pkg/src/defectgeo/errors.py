"""Exception hierarchy shared by all defectgeo modules."""


class DefectGeoError(Exception):
    """Base class for every error raised by this package."""


class DegreeOverflow(DefectGeoError):
    """Wedge product would exceed degree 3.

    In three dimensions every well-formed expression of the theory stays at
    degree <= 3, so overflow signals a transcription bug rather than a value
    that should silently collapse to zero.
    """


class DerivativeDepthExceeded(DefectGeoError):
    """More than three nested finite-difference derivatives requested."""


class ParseError(DefectGeoError):
    """Malformed expression text.

    Attributes:
        offset: byte offset into the input where parsing failed.
        expected: short description of the token class that was expected.
    """

    def __init__(self, offset, expected, found=None):
        self.offset = offset
        self.expected = expected
        self.found = found
        detail = f", found {found!r}" if found is not None else ""
        super().__init__(f"parse error at offset {offset}: expected {expected}{detail}")


class EvaluationError(DefectGeoError):
    """Expression hit an undefined value (division by zero, ln of x <= 0, ...).

    Carries the point at which evaluation failed so scenario bugs are
    reported with a location instead of propagating NaN.
    """

    def __init__(self, message, point=None):
        self.point = point
        where = f" at {point}" if point is not None else ""
        super().__init__(f"{message}{where}")


class ScenarioError(DefectGeoError):
    """Invalid scenario file; carries the offending line number(s)."""

    def __init__(self, message, lines=()):
        self.lines = tuple(lines)
        where = f" (line{'s' if len(self.lines) > 1 else ''} {', '.join(map(str, self.lines))})" if self.lines else ""
        super().__init__(f"{message}{where}")


class SingularTriad(DefectGeoError):
    """Coframe triad not invertible at a sampled point."""


class SingularGauge(DefectGeoError):
    """Gauge matrix not invertible at a sampled point."""


class SingularDeformation(DefectGeoError):
    """Deformation-map Jacobian not invertible at a sampled point."""


class NewtonFailure(DefectGeoError):
    """Numeric inversion of a forward deformation map did not converge."""


class AnisotropyNotSupported(DefectGeoError):
    """Nonzero antisymmetric Lame constant passed to the isotropic law."""


class InvalidMaterial(DefectGeoError):
    """Material constants violate their admissibility range."""

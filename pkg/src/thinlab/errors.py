"""Exception vocabulary shared across the laboratory modules."""


class ThinlabError(Exception):
    """Base class for all laboratory failures."""


class NonPositiveProfile(ThinlabError):
    """Thickness profile is not strictly positive on the open interval."""


class EndpointViolation(ThinlabError):
    """Thickness profile does not vanish at x = 0 or x = 1."""


class EllipticityViolation(ThinlabError):
    """Sampled Rayleigh quotient of the principal part fell below lambda.

    Carries the witnessing point and direction.
    """

    def __init__(self, message, x=None, y=None, direction=None, quotient=None):
        super().__init__(message)
        self.x = x
        self.y = y
        self.direction = direction
        self.quotient = quotient


class OutOfDomain(ThinlabError):
    """Operator evaluation requested outside the closed unit region."""


class NonInvertible(ThinlabError):
    """Coordinate change failed its injectivity check."""


class DegenerateRatio(ThinlabError):
    """Straightening ratio left the admissible band [1, 1 + C_f]."""


class SingularCoefficient(ThinlabError):
    """Mapped operator coefficient overflowed (profile too thin for the grid)."""


class NoConvergence(ThinlabError):
    """Linear solver terminated above the residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RangeViolation(ThinlabError):
    """A derived quantity left its required sign/range window."""


class OutOfWedge(ThinlabError):
    """Barrier evaluation requested outside the corner wedge."""


class DegenerateC(ThinlabError):
    """Vertical second-order coefficient vanishes; collapse state undefined."""


class GridMismatch(ThinlabError):
    """Discrete solution and collapse state live on different x grids."""


class ConfigError(ThinlabError):
    """Experiment configuration is malformed."""

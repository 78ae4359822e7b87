"""Exception types raised by the library."""


class SpiralAnchorError(Exception):
    """Base class for all library errors."""


class ConfigurationError(SpiralAnchorError):
    """Invalid parameters, malformed config, or an unknown family kind."""


class UnsupportedConfigurationError(SpiralAnchorError):
    """A valid configuration outside the scope of the requested operation."""


class SingularOperatorError(SpiralAnchorError):
    """Inversion of the mode operator hit its resonant kernel mode."""


class NoSolutionError(SpiralAnchorError):
    """The periodic-correction iteration failed to converge; parameters
    are outside the contraction neighbourhood."""


class StiffnessError(SpiralAnchorError):
    """Adaptive step size underflowed."""


class DriftToInfinityError(SpiralAnchorError):
    """Orbit left the trust region; the wave is drifting off rather than
    settling on a periodic orbit."""


class DegenerateMapError(SpiralAnchorError):
    """Return-map Jacobian is (numerically) the identity or singular, so
    hyperbolic fixed-point location is ill-posed."""


class NoFixedPointError(SpiralAnchorError):
    """Newton iteration did not converge near the supplied guess."""


class NotPeriodicError(SpiralAnchorError):
    """A trajectory expected to close up over one period did not."""


class BlowUpError(SpiralAnchorError):
    """Field values became non-finite during explicit time stepping."""

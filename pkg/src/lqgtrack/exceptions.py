"""Exception types raised across the package."""


class LQGTrackError(Exception):
    """Base class for all package errors."""


class ConfigError(LQGTrackError, ValueError):
    """Inconsistent dimensions, grids, or configuration values."""


class NotSymmetric(LQGTrackError, ValueError):
    pass


class NotPositiveDefinite(LQGTrackError, ValueError):
    pass


class SingularDiffusion(LQGTrackError, ArithmeticError):
    """The Gram matrix sigma_S sigma_S^T cannot be inverted."""


class NonPositiveF00(LQGTrackError, ArithmeticError):
    """The wealth curvature coefficient F00 left the positive half-line."""


class OutOfRange(LQGTrackError, ValueError):
    pass


class MissingValueTerms(LQGTrackError, ValueError):
    pass


class InsufficientData(LQGTrackError, ValueError):
    pass


class CoverageError(LQGTrackError, ValueError):
    pass

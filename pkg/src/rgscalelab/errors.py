"""Exception hierarchy shared by all modules."""


class RGScaleLabError(Exception):
    """Base class for errors raised by rgscalelab."""


class DimensionError(RGScaleLabError, ValueError):
    """A point, kernel or model has an unsupported or mismatched dimension."""


class SingularPointError(RGScaleLabError, ValueError):
    """Evaluation requested exactly on a pole (e.g. the Bose factor at e(k) = mu)."""


class DivergenceError(RGScaleLabError):
    """The requested integral does not converge (non-integrable singularity)."""


class QuadratureError(RGScaleLabError):
    """An adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class MissingValueError(RGScaleLabError, KeyError):
    """A correlation value needed for a partition sum is not tabulated."""


class FitError(RGScaleLabError, ValueError):
    """Log-log regression is impossible on the requested window."""


class ConfigError(RGScaleLabError):
    """Configuration text failed validation; ``errors`` lists every problem."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))

"""Exception types raised across the package."""


class GlmcmcError(Exception):
    pass


class DimensionMismatch(GlmcmcError, ValueError):
    pass


class MissingDesign(GlmcmcError, ValueError):
    """A data-dependent prior was evaluated without its design matrix."""


class StaleCache(GlmcmcError, RuntimeError):
    pass


class ConditionalSamplerFailure(GlmcmcError, RuntimeError):
    """Envelope construction or quadrature for a 1-D conditional draw failed."""


class NonFiniteGradient(GlmcmcError, FloatingPointError):
    pass


class SingularQ(GlmcmcError, ValueError):
    pass


class PreconditionViolated(GlmcmcError, ValueError):
    pass


class QuadratureDivergence(GlmcmcError, RuntimeError):
    pass


class UnboundedCurvature(GlmcmcError, ValueError):
    """Raised for families whose A'' is unbounded (unclipped Poisson)."""


class EmptySamples(GlmcmcError, ValueError):
    pass


class InsufficientGrid(GlmcmcError, ValueError):
    pass


class ConfigError(GlmcmcError, ValueError):
    pass

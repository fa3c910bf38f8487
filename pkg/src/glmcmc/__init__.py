"""Gibbs and unadjusted HMC samplers for Bayesian GLM posteriors with theory-derived schedules."""

from .errors import (
    ConditionalSamplerFailure,
    ConfigError,
    DimensionMismatch,
    EmptySamples,
    GlmcmcError,
    InsufficientGrid,
    MissingDesign,
    NonFiniteGradient,
    PreconditionViolated,
    QuadratureDivergence,
    SingularQ,
    StaleCache,
    UnboundedCurvature,
)
from .families import GlmFamily
from .mapsolve import MapResult, find_map
from .posterior import Posterior, load_dataset, save_dataset
from .priors import Prior
from .synth import SigmaStats, SynthConfig, make_dataset

__version__ = "0.1.0"

__all__ = [
    "ConditionalSamplerFailure", "ConfigError", "DimensionMismatch", "EmptySamples", "GlmFamily",
    "GlmcmcError", "InsufficientGrid", "MapResult", "MissingDesign", "NonFiniteGradient",
    "Posterior", "PreconditionViolated", "Prior", "QuadratureDivergence", "SigmaStats",
    "SingularQ", "StaleCache", "SynthConfig", "UnboundedCurvature", "find_map", "load_dataset",
    "make_dataset", "save_dataset",
]

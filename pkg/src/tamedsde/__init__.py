"""Tamed Euler integration for SDEs with superlinearly growing drift, with a
coupled Monte Carlo harness for strong-error, moment, and divergence studies.
"""

from .core import (
    AssumptionMetadata,
    DomainError,
    NumericError,
    SdeModel,
    TimeGrid,
    eval_diffusion,
    eval_drift,
    realize_initial,
    tame_drift,
)
from .estimators import (
    ErrorTable,
    MomentReport,
    RateFit,
    SpotCheckReport,
    fit_rate,
    increment_moment,
    moment_sup,
    spot_check_assumptions,
    strong_error,
)
from .models import (
    MODEL_BUILDERS,
    build_model,
    make_cubic,
    make_cubic_3d,
    make_cubic_multiplicative,
    make_gbm,
    make_zero,
)
from .noise import IncrementArray, NoisePlan, aggregate_increments, generate_increments
from .schemes import SchemeSpec, Trajectory, interpolate, simulate, step

__version__ = "0.1.0"

__all__ = [
    "AssumptionMetadata",
    "DomainError",
    "NumericError",
    "SdeModel",
    "TimeGrid",
    "tame_drift",
    "eval_drift",
    "eval_diffusion",
    "realize_initial",
    "NoisePlan",
    "IncrementArray",
    "generate_increments",
    "aggregate_increments",
    "SchemeSpec",
    "Trajectory",
    "step",
    "simulate",
    "interpolate",
    "ErrorTable",
    "MomentReport",
    "RateFit",
    "SpotCheckReport",
    "strong_error",
    "moment_sup",
    "increment_moment",
    "fit_rate",
    "spot_check_assumptions",
    "MODEL_BUILDERS",
    "build_model",
    "make_gbm",
    "make_cubic",
    "make_cubic_multiplicative",
    "make_cubic_3d",
    "make_zero",
    "__version__",
]

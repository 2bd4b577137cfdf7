"""Bearing-only (AOA) source localization.

Consistent, asymptotically efficient estimation from azimuth (and elevation)
measurements: bias-eliminated least squares with data-driven noise-moment
estimation, one-step Gauss-Newton refinement, CRLB benchmarks, and a
reproducible Monte Carlo harness.
"""

from .errors import (
    DegenerateGeometryError,
    EstimationError,
    IllConditionedError,
    InvalidScatterError,
    UndefinedCrlbError,
    UnidentifiableGeometryError,
)
from .model import (
    MeasurementSet,
    NoiseModel,
    SensorArray,
    SourceLocation,
    mean_cos,
    sigma_from_var_sin,
    synthesize_measurements,
    true_bearing_2d,
    true_elevation_3d,
    var_cos,
    var_sin,
    wrap_angle,
)
from .estim2d import (
    Estimate,
    Regression2d,
    bels,
    build_regression,
    estimate_var_sin_2d,
    gn_refine_2d,
    ml_objective_2d,
    pls,
    two_step_2d,
)
from .estim3d import (
    ZRegression,
    bels_3d,
    bels_z,
    build_z_regression,
    estimate_var_sin_e,
    gn_refine_3d,
    planar_bels_3d,
    pls_3d,
    plug_in_ranges,
    two_step_3d,
)
from .crlb import FisherInfo, fisher_2d, fisher_3d, rcrlb, rcrlb_2d, rcrlb_3d
from .harness import (
    CampaignResult,
    FixedArray,
    McCell,
    RandomCircle,
    ReplicatedSites,
    Scenario,
    metrics,
    run_campaign,
    slope_check,
)

__version__ = "0.1.0"

__all__ = [
    "CampaignResult",
    "DegenerateGeometryError",
    "Estimate",
    "EstimationError",
    "FisherInfo",
    "FixedArray",
    "IllConditionedError",
    "InvalidScatterError",
    "McCell",
    "MeasurementSet",
    "NoiseModel",
    "RandomCircle",
    "Regression2d",
    "ReplicatedSites",
    "Scenario",
    "SensorArray",
    "SourceLocation",
    "UndefinedCrlbError",
    "UnidentifiableGeometryError",
    "ZRegression",
    "bels",
    "bels_3d",
    "bels_z",
    "build_regression",
    "build_z_regression",
    "estimate_var_sin_2d",
    "estimate_var_sin_e",
    "fisher_2d",
    "fisher_3d",
    "gn_refine_2d",
    "gn_refine_3d",
    "mean_cos",
    "metrics",
    "ml_objective_2d",
    "planar_bels_3d",
    "pls",
    "pls_3d",
    "plug_in_ranges",
    "rcrlb",
    "rcrlb_2d",
    "rcrlb_3d",
    "run_campaign",
    "sigma_from_var_sin",
    "slope_check",
    "synthesize_measurements",
    "true_bearing_2d",
    "true_elevation_3d",
    "two_step_2d",
    "two_step_3d",
    "var_cos",
    "var_sin",
    "wrap_angle",
]

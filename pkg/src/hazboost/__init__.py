"""Boosted nonparametric hazard estimation with time-dependent covariates."""

from ._kernels import BACKEND as kernel_backend
from .boost import (
    BoostFit,
    Schedule,
    fit,
    importance,
    lambert_w,
    line_search,
    load_model,
    make_schedule,
    predict,
    save_model,
)
from .crossval import CVPlan, CVResult, cross_validate
from .errors import HazboostError, NumericError, ValidationError
from .funcdata import Dataset, Segment, Subject, ingest_csv, write_csv
from .hazrisk import (
    CellFunction,
    PiecewiseLogHazard,
    alignment,
    gradient,
    likelihood_risk,
    mle_hazard,
    norms,
    risk,
    risk_on_subjects,
)
from .partition import AxisSpec, CellStats, Grid, GridStats, accumulate, build_grid
from .simqueue import HazardSpec, SimConfig, service_rate, simulate, true_hazard_table
from .treelearn import FittedTree, fit_tree, normalize, split_improvements

__version__ = "0.1.0"

__all__ = [
    "AxisSpec",
    "BoostFit",
    "CVPlan",
    "CVResult",
    "CellFunction",
    "CellStats",
    "Dataset",
    "FittedTree",
    "Grid",
    "GridStats",
    "HazardSpec",
    "HazboostError",
    "NumericError",
    "PiecewiseLogHazard",
    "Schedule",
    "Segment",
    "SimConfig",
    "Subject",
    "ValidationError",
    "accumulate",
    "alignment",
    "build_grid",
    "cross_validate",
    "fit",
    "fit_tree",
    "gradient",
    "importance",
    "ingest_csv",
    "kernel_backend",
    "lambert_w",
    "likelihood_risk",
    "line_search",
    "load_model",
    "make_schedule",
    "mle_hazard",
    "normalize",
    "norms",
    "predict",
    "risk",
    "risk_on_subjects",
    "save_model",
    "service_rate",
    "simulate",
    "split_improvements",
    "true_hazard_table",
    "write_csv",
]

"""Simulation and verification of locally constrained inverse curvature
flows of rotationally symmetric star-shaped graphs in warped products."""

from .errors import (
    ConeViolation,
    ConvergenceError,
    DomainError,
    GeometryError,
    MeanConvexityError,
    NonFiniteError,
    RangeError,
    SizeError,
    WarpFlowError,
)
from .flow import DiagnosticsRecord, FlowConfig, FlowResult, cfl_dt, evolve, speed, step
from .geometry import CurvatureField, GraphSurface, curvature_field
from .grid import Grid, sphere_area
from .initdata import offcenter_sphere, perturbed_slice, slice
from .warp import Kind, WarpModel, build_ads_schwarzschild, make_model

__version__ = "0.1.0"

__all__ = [
    "ConeViolation", "ConvergenceError", "DomainError", "GeometryError", "MeanConvexityError",
    "NonFiniteError", "RangeError", "SizeError", "WarpFlowError",
    "DiagnosticsRecord", "FlowConfig", "FlowResult", "cfl_dt", "evolve", "speed", "step",
    "CurvatureField", "GraphSurface", "curvature_field", "Grid", "sphere_area",
    "offcenter_sphere", "perturbed_slice", "slice",
    "Kind", "WarpModel", "build_ads_schwarzschild", "make_model",
]

"""Bistatic SAR simulation on elliptical iso-range curves and its artifact predictors."""

from .cutoffs import (
    CollarSelection,
    bump,
    classify_region,
    in_critical_box,
    mute_f,
    mute_g,
    psi1,
    psi2,
    ratio_level,
    region_mute,
    select_epsilon,
)
from .errors import ConfigError, EllipsarError, FormatError, ModeError, SelectionError
from .geometry import (
    AcquisitionConfig,
    GroundCircle,
    GroundEllipse,
    ProlateCoords,
    bistatic_ranges,
    circle_endpoints,
    critical_axis_points,
    critical_circle,
    critical_times,
    ellipse_points,
    ground_ellipse,
    ground_from_prolate,
    platform_positions,
    prolate_from_ground,
    range_ratio_circle,
    ratio_threshold,
    threshold_time,
)
from .microlocal import (
    CanonicalPoint,
    CovectorPoint,
    DataCovector,
    SigmaLabel,
    canonical_image,
    classify_sigma,
    composition_residual,
    det_dpiL,
    jacobian_piL,
    jacobian_piR,
    predict_c1,
    predict_c2_partners,
    predict_common_midpoint,
)
from .transform import (
    GridSpec,
    Image,
    Sinogram,
    adjoint,
    amplitude,
    apply_dt2,
    config_for_grid,
    forward,
    forward_spotlight,
    normal,
    spotlight_mask,
)

__all__ = [
    "AcquisitionConfig",
    "CanonicalPoint",
    "CollarSelection",
    "ConfigError",
    "CovectorPoint",
    "DataCovector",
    "EllipsarError",
    "FormatError",
    "GridSpec",
    "GroundCircle",
    "GroundEllipse",
    "Image",
    "ModeError",
    "ProlateCoords",
    "SelectionError",
    "SigmaLabel",
    "Sinogram",
    "adjoint",
    "amplitude",
    "apply_dt2",
    "bistatic_ranges",
    "bump",
    "canonical_image",
    "circle_endpoints",
    "classify_region",
    "classify_sigma",
    "composition_residual",
    "config_for_grid",
    "critical_axis_points",
    "critical_circle",
    "critical_times",
    "det_dpiL",
    "ellipse_points",
    "forward",
    "forward_spotlight",
    "ground_ellipse",
    "ground_from_prolate",
    "in_critical_box",
    "jacobian_piL",
    "jacobian_piR",
    "mute_f",
    "mute_g",
    "normal",
    "platform_positions",
    "predict_c1",
    "predict_c2_partners",
    "predict_common_midpoint",
    "prolate_from_ground",
    "psi1",
    "psi2",
    "range_ratio_circle",
    "ratio_level",
    "ratio_threshold",
    "region_mute",
    "select_epsilon",
    "spotlight_mask",
    "threshold_time",
]

__version__ = "0.1.0"

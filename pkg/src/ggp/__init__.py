"""Generalized gamma polytopes: sampling, hulls, rescaling, festoons,
and the desk-scale experiment harness around their limit behavior."""

from .errors import GgpError
from .festoon import (
    Festoon,
    extreme_points,
    lift,
    phi_boundary,
    psi_boundary,
    psi_lambda_boundary,
    rescaled_hull_boundary,
    sup_distance,
)
from .hull import (
    Polytope,
    convex_hull,
    intrinsic_volume,
    is_vertex_ball,
    is_vertex_lp,
    radial_function,
    surface_area,
    volume,
)
from .params import (
    ModelParams,
    NormalizationConstants,
    critical_radius,
    normalization,
    unit_ball_volume,
    validate_params,
)
from .rescale import (
    QuasiGrain,
    ScaledPoint,
    exp_inverse,
    exp_map,
    grain_boundary,
    inverse_transform,
    rescaled_intensity,
    transform,
)
from .sampling import (
    PointCloud,
    RngStream,
    ScaledWindow,
    sample_direction,
    sample_limit_process,
    sample_polytope_input,
    sample_radius,
    sample_standardized_max,
)

__version__ = "0.1.0"

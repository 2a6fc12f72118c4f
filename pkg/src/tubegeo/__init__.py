"""Complex geodesics and invariant distances in tube domains over convex bases."""

from .base_geometry import (
    Ball,
    BaseDomain,
    CustomSmooth,
    Ellipsoid,
    IntervalProduct,
    PolytopeBase,
    Superellipse,
    boundary_intersection,
    gauss_map,
    support_interval,
    support_point,
)
from .errors import ArgumentError, DegenerateParamsError, DomainError, NumericError, QuadratureError, TubeGeoError
from .geodesic_family import FCase, GeodesicParams, boundary_limits, boundary_profile, classify_case
from .geodesic_solver import connect, connect_boundary, kobayashi_distance, uniqueness_probe, verify_geodesic
from .metrics import (
    ModelSpace,
    affine_lower_bound,
    check_hilbert_inequality,
    hilbert_distance,
    lempert_upper_bound,
    model_distance,
    poincare,
)

__version__ = "0.1.0"

"""Simulators for every variant of the kinetic Brownian motion dynamics."""

from .states import (
    ClockRecord,
    EuclideanState,
    GroupLiftState,
    HyperbolicPlaneState,
    PolarState,
    RadialState,
    Trajectory,
    column_order,
    config_fingerprint,
)
from .euclidean import (
    EuclideanEnsemble,
    rescale_ensemble,
    rescale_interpolation,
    simulate_euclidean,
    simulate_euclidean_ensemble,
)
from .polar import (
    PolarEnsemble,
    RadialEnsemble,
    compute_clocks,
    pathwise_identity_error,
    simulate_polar,
    simulate_polar_ensemble,
    simulate_radial,
    simulate_radial_ensemble,
)
from .hyperbolic import h2_geodesic, simulate_hyperbolic_plane
from .group_lift import (
    GroupLiftEnsemble,
    group_lift_initial,
    plane_generator,
    simulate_group_lift,
    simulate_group_lift_ensemble,
)

__all__ = [
    "ClockRecord",
    "EuclideanState",
    "GroupLiftState",
    "HyperbolicPlaneState",
    "PolarState",
    "RadialState",
    "Trajectory",
    "column_order",
    "config_fingerprint",
    "EuclideanEnsemble",
    "rescale_ensemble",
    "rescale_interpolation",
    "simulate_euclidean",
    "simulate_euclidean_ensemble",
    "PolarEnsemble",
    "RadialEnsemble",
    "compute_clocks",
    "pathwise_identity_error",
    "simulate_polar",
    "simulate_polar_ensemble",
    "simulate_radial",
    "simulate_radial_ensemble",
    "h2_geodesic",
    "simulate_hyperbolic_plane",
    "GroupLiftEnsemble",
    "group_lift_initial",
    "plane_generator",
    "simulate_group_lift",
    "simulate_group_lift_ensemble",
]

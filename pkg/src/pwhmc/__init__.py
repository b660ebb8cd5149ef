"""Exact HMC sampling of piecewise Gaussian densities on piecewise affine
constraint manifolds.

The pieces: ``model`` defines the problem (regions, potentials, lookup
table), ``subspace`` the constrained linear algebra, ``dynamics`` the exact
trajectories and boundary rules, ``sampler`` the chain loop, ``oracle``
independent ground truths for testing, and ``cli`` the command-line tools.
"""

__version__ = "0.1.0"

from .errors import (
    ContractError,
    DegenerateNormalError,
    ModelFormatError,
    StallError,
)
from .model import (
    ModelSpec,
    RegionBoundary,
    ell,
    load_model,
    load_model_file,
    potential,
    region_boundaries,
    region_membership,
    validate_model,
)
from .subspace import (
    NullSpaceDecomposition,
    RegionDynamics,
    boundary_normal,
    continuity_check,
    get_ode_param_cached,
    isotropic_ode_param,
    null_space_decomposition,
    ode_coef,
    ode_param,
)
from .dynamics import (
    BoundaryEvent,
    RegionCache,
    TrajectorySegment,
    boundary_dynamics,
    evolve_segment,
    evolve_segment_unified,
    evolve_to_boundary,
    hit_time,
    wall_dynamics,
)
from .sampler import (
    ChainConfig,
    ChainOutput,
    ParticleState,
    initial_point_check,
    refresh_velocity,
    run_chain,
)
from .oracle import (
    ConditionalMoments,
    conditional_gaussian_moments,
    grid_hit_time,
    occupancy_quadrature_line,
    slab_rejection_sample,
)
from . import zoo

__all__ = [
    "__version__",
    "ContractError", "DegenerateNormalError", "ModelFormatError", "StallError",
    "ModelSpec", "RegionBoundary", "ell", "load_model", "load_model_file",
    "potential", "region_boundaries", "region_membership", "validate_model",
    "NullSpaceDecomposition", "RegionDynamics", "boundary_normal",
    "continuity_check", "get_ode_param_cached", "isotropic_ode_param",
    "null_space_decomposition", "ode_coef", "ode_param",
    "BoundaryEvent", "RegionCache", "TrajectorySegment", "boundary_dynamics",
    "evolve_segment", "evolve_segment_unified", "evolve_to_boundary",
    "hit_time", "wall_dynamics",
    "ChainConfig", "ChainOutput", "ParticleState", "initial_point_check",
    "refresh_velocity", "run_chain",
    "ConditionalMoments", "conditional_gaussian_moments", "grid_hit_time",
    "occupancy_quadrature_line", "slab_rejection_sample",
    "zoo",
]

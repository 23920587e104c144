"""Uniform spanning trees of Z^3 and collisions of random walks on them."""

from .collision import (
    CEMETERY,
    DEFAULT_EPS_GRID,
    BallTooLarge,
    CollisionSample,
    ExactMoments,
    MomentReport,
    exact_moments,
    infinite_collision_demo,
    moment_report,
    sample_Z,
    sample_Z_many,
    step_killed_walk,
    moment_bound_experiment,
)
from .lattice import ORIGIN, Box, LatticePath, LatticePoint, neighbors
from .network import (
    green_diagonal,
    green_series,
    resistance_general,
    resistance_profile,
    resistance_tree,
)
from .rng import RngStream
from .treemetrics import IntrinsicBall, TruncationError, component_Ur, intrinsic_ball, tree_distance, tree_path
from .walk import (
    InvalidConfiguration,
    StepBudgetExceeded,
    estimate_beta,
    lerw_length_sample,
    loop_erase,
    loop_erase_naive,
    srw_until,
)
from .wilson import (
    ContainerTooSmall,
    LatticeWilson,
    SpanningTree,
    WilsonConfig,
    spanning_tree_count,
    wilson_graph,
    wilson_infinity_approx,
    wilson_wired,
)

__version__ = "0.1.0"

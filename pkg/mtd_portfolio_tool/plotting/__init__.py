"""Plot data for the assortativity profiles (no rendering)"""

from .loess import PlotProfile, loess_smooth, profiles_frame, tricube, write_profiles
from .profiles import (
    PROFILE_KINDS,
    build_profiles,
    edge_profile_points,
    node_excess_out_strength,
    node_profile_points,
)

__all__ = [
    "PlotProfile",
    "loess_smooth",
    "profiles_frame",
    "tricube",
    "write_profiles",
    "PROFILE_KINDS",
    "build_profiles",
    "edge_profile_points",
    "node_excess_out_strength",
    "node_profile_points",
]

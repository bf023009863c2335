"""Learning autonomous docking from expert demonstrations.

Pipeline: simulate a dock basin, generate expert trajectories with RRT* and
PD tracking, rasterize vessel-centered feature maps, and train a
convolutional reward network with maximum-entropy deep IRL.
"""

from .world import World, WorldConfig, VesselState, build_world, is_collision, step_vessel

__all__ = [
    "World", "WorldConfig", "VesselState",
    "build_world", "is_collision", "step_vessel",
]

__version__ = "0.1.0"

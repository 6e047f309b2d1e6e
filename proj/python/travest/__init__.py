"""Python bindings for the self-supervised traversability pipeline."""

from ._core import (
    generate_scan,
    mix_seed,
    ransac_ground,
    to_costmap,
    traversability_score,
    update_radius,
    voxelize,
)

__all__ = [
    "generate_scan",
    "mix_seed",
    "ransac_ground",
    "to_costmap",
    "traversability_score",
    "update_radius",
    "voxelize",
]

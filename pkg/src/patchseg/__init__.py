"""Patch-based semantic segmentation of triangle meshes.

Per-vertex geodesic patches are flattened to the unit disk, rotationally
aligned by a surface flow field, sampled onto fixed-resolution grids of
spectral and curvature descriptors, and classified by a small convolutional
network. Vertex predictions are folded to faces and scored by area-weighted
accuracy.
"""

__version__ = "0.1.0"

from .mesh import TriMesh, SubMesh, MeshError, TopologyError, load_mesh, save_mesh
from .geodesics import (
    GeodesicBall,
    GeodesicEngine,
    GeodesicError,
    avg_geodesic_distance,
    geodesic_ball,
    patch_radius,
)

__all__ = [
    "TriMesh",
    "SubMesh",
    "MeshError",
    "TopologyError",
    "load_mesh",
    "save_mesh",
    "GeodesicBall",
    "GeodesicEngine",
    "GeodesicError",
    "avg_geodesic_distance",
    "geodesic_ball",
    "patch_radius",
    "__version__",
]

"""Voxel-hashing map of 3D points with a raycasting visible-point query."""
from .camera import CameraModel, Pose, backproject, project_point, project_points
from .core import (InsertOutcome, MapPoint, MapStats, Voxel, VoxelKey, VoxelMap, VoxelMapConfig,
                   hash_key, voxel_key)
from .frustum import (ConfigurationError, RayTemplate, VisibleSet, build_ray_template,
                      query_visible)
from .keyframes import Keyframe, KeyframeMap, build_from_scene, query_visible_kf

__version__ = "0.1.0"

__all__ = [
    "CameraModel", "ConfigurationError", "InsertOutcome", "Keyframe", "KeyframeMap", "MapPoint",
    "MapStats", "Pose", "RayTemplate", "VisibleSet", "Voxel", "VoxelKey", "VoxelMap",
    "VoxelMapConfig", "backproject", "build_from_scene", "build_ray_template", "hash_key",
    "project_point", "project_points", "query_visible", "query_visible_kf", "voxel_key",
]

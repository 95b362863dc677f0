"""Naive keyframe map used as the comparison baseline.

Every map point belongs to exactly one keyframe. A visibility query scans
all keyframes and frustum-tests their points one keyframe at a time, so the
cost grows with the number of keyframes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .camera import CameraModel, Pose, project_points
from .core import MapPoint

DEFAULT_MAX_POINTS_PER_KF = 100


@dataclass
class Keyframe:
    pose: Pose
    points: list[MapPoint]
    positions: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.positions is None:
            self.positions = np.array([p.position for p in self.points], dtype=float).reshape(-1, 3)


@dataclass
class KeyframeMap:
    keyframes: list[Keyframe]
    cam: CameraModel
    max_points_per_kf: int = DEFAULT_MAX_POINTS_PER_KF

    @property
    def point_count(self) -> int:
        return sum(len(kf.points) for kf in self.keyframes)


@dataclass
class KeyframeQueryResult:
    points: list[MapPoint]
    depths: list[float]
    keyframes_scanned: int
    overlapping: list[int]

    def point_ids(self) -> set[int]:
        return {p.id for p in self.points}


def build_from_scene(points: Sequence[MapPoint], poses: Sequence[Pose],
                     cam: CameraModel | None = None,
                     max_points_per_kf: int = DEFAULT_MAX_POINTS_PER_KF) -> KeyframeMap:
    """Partition ``points`` into keyframes.

    Each point goes to the pose whose camera centre is nearest; a pose
    that collects more than ``max_points_per_kf`` points is split into
    several keyframes sharing that pose. Poses left without points produce
    no keyframe.
    """
    if not poses:
        raise ValueError("build_from_scene needs at least one pose")
    if max_points_per_kf < 1:
        raise ValueError(f"max_points_per_kf must be >= 1, got {max_points_per_kf}")
    cam = cam if cam is not None else CameraModel()
    if not points:
        return KeyframeMap([], cam, max_points_per_kf)

    positions = np.array([p.position for p in points], dtype=float)
    centres = np.array([pose.translation for pose in poses])
    # Chunk to keep the distance matrix small for long scenes.
    owner = np.empty(len(points), dtype=np.int64)
    for start in range(0, len(points), 4096):
        block = positions[start:start + 4096]
        d2 = ((block[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
        owner[start:start + 4096] = np.argmin(d2, axis=1)

    keyframes = []
    for pose_idx in range(len(poses)):
        members = np.flatnonzero(owner == pose_idx)
        for start in range(0, len(members), max_points_per_kf):
            chunk = members[start:start + max_points_per_kf]
            keyframes.append(Keyframe(poses[pose_idx], [points[i] for i in chunk],
                                      positions[chunk]))
    return KeyframeMap(keyframes, cam, max_points_per_kf)


def query_visible_kf(kf_map: KeyframeMap, query_pose: Pose,
                     d_min: float, d_max: float) -> KeyframeQueryResult:
    """Scan every keyframe and return its points that fall in the frustum.

    A keyframe with at least one visible point is marked overlapping. There
    is no occlusion reasoning.
    """
    cam = kf_map.cam
    found: list[MapPoint] = []
    depths: list[float] = []
    overlapping: list[int] = []
    scanned = 0
    for idx, kf in enumerate(kf_map.keyframes):
        scanned += 1
        if not kf.points:
            continue
        _, z, valid = project_points(cam, query_pose, kf.positions)
        valid &= (z >= d_min) & (z <= d_max)
        if not valid.any():
            continue
        overlapping.append(idx)
        for i in np.flatnonzero(valid):
            found.append(kf.points[i])
            depths.append(float(z[i]))
    return KeyframeQueryResult(found, depths, scanned, overlapping)


def keyframe_rows(result: KeyframeQueryResult) -> list[tuple]:
    """Result-CSV rows; voxel and ray columns are left empty."""
    return [("", "", "", "", p.id, repr(d)) for p, d in zip(result.points, result.depths)]

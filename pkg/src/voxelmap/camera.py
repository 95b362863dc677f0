"""Pinhole camera and rigid camera poses.

Camera frame convention: x right, y down, z forward (optical axis).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ROTATION_TOL = 1e-9


@dataclass(frozen=True)
class CameraModel:
    fx: float = 500.0
    fy: float = 500.0
    cx: float = 320.0
    cy: float = 240.0
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be > 0, got fx={self.fx}, fy={self.fy}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(
                f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height} image")

    def in_bounds(self, u, v, margin=0.0):
        return (-margin <= u < self.width + margin) and (-margin <= v < self.height + margin)

    def bearing(self, u: float, v: float) -> np.ndarray:
        """Camera-frame ray through pixel (u, v), scaled to unit depth (z = 1)."""
        return np.array([(u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0])


class Pose:
    """World-from-camera rigid transform: ``p_world = R @ p_cam + t``."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation, translation):
        R = np.array(rotation, dtype=float).reshape(3, 3)
        t = np.array(translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(t)):
            raise ValueError("pose must be finite")
        if np.max(np.abs(R.T @ R - np.eye(3))) > ROTATION_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ROTATION_TOL:
            raise ValueError("rotation must have determinant +1")
        R.setflags(write=False)
        t.setflags(write=False)
        self.rotation = R
        self.translation = t

    def __repr__(self):
        return f"Pose(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return (np.array_equal(self.rotation, other.rotation)
                and np.array_equal(self.translation, other.translation))

    @property
    def position(self) -> np.ndarray:
        return self.translation

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_yaw(cls, position, yaw: float, pitch: float = 0.0) -> "Pose":
        """Camera at ``position`` in a z-up world looking along heading ``yaw``
        (radians from +x towards +y), tilted up by ``pitch``."""
        cy_, sy_ = math.cos(yaw), math.sin(yaw)
        cp, sp = math.cos(pitch), math.sin(pitch)
        forward = np.array([cp * cy_, cp * sy_, sp])
        down = np.array([sp * cy_, sp * sy_, -cp])
        right = np.cross(down, forward)
        return cls(np.column_stack([right, down, forward]), position)

    @classmethod
    def look_at(cls, eye, target, up=(0.0, 0.0, 1.0)) -> "Pose":
        eye = np.asarray(eye, dtype=float)
        forward = np.asarray(target, dtype=float) - eye
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(up, dtype=float))
        n = np.linalg.norm(right)
        if n < 1e-12:
            raise ValueError("look_at: view direction parallel to up vector")
        right /= n
        down = np.cross(forward, right)
        return cls(np.column_stack([right, down, forward]), eye)

    def to_world(self, pts_cam: np.ndarray) -> np.ndarray:
        return pts_cam @ self.rotation.T + self.translation

    def to_camera(self, pts_world: np.ndarray) -> np.ndarray:
        return (pts_world - self.translation) @ self.rotation


def project_point(cam: CameraModel, pose: Pose, point) -> tuple[float, float, float] | None:
    """Pixel ``(u, v)`` and depth of a world point, or None when the point is
    behind the camera or projects outside the image."""
    pc = pose.to_camera(np.asarray(point, dtype=float))
    z = pc[2]
    if not z > 0:
        return None
    u = cam.fx * pc[0] / z + cam.cx
    v = cam.fy * pc[1] / z + cam.cy
    if not cam.in_bounds(u, v):
        return None
    return float(u), float(v), float(z)


def project_points(cam: CameraModel, pose: Pose, points: np.ndarray):
    """Vectorised projection.

    Returns ``(uv, depth, valid)`` where ``valid`` marks points in front of
    the camera that land inside the image. ``uv`` is NaN where depth <= 0.
    """
    pc = pose.to_camera(np.asarray(points, dtype=float).reshape(-1, 3))
    z = pc[:, 2]
    front = z > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(front, cam.fx * pc[:, 0] / z + cam.cx, np.nan)
        v = np.where(front, cam.fy * pc[:, 1] / z + cam.cy, np.nan)
    valid = front & (u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)
    return np.column_stack([u, v]), z, valid


def backproject(cam: CameraModel, pose: Pose, u: float, v: float, depth: float) -> np.ndarray:
    """World point at camera depth ``depth`` along the ray through (u, v)."""
    return pose.to_world(cam.bearing(u, v) * depth)

"""Raycasting visible-point query over a :class:`~voxelmap.core.VoxelMap`.

The frustum is discretised once, in the camera frame, into ``r`` rays with
``s`` samples each. A query moves those samples into the world with the
camera pose and probes the voxel under each sample, nearest first.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .camera import CameraModel, Pose
from .core import MapPoint, VoxelKey, VoxelMap

RESULT_CSV_HEADER = ("ray_id", "voxel_ix", "voxel_iy", "voxel_iz", "point_id", "depth")

DEFAULT_GRID_STEP = 32
DEFAULT_D_MIN = 0.5
DEFAULT_D_MAX = 30.0


class ConfigurationError(ValueError):
    """Template and map disagree on the voxel size."""


@dataclass(frozen=True, eq=False)
class RayTemplate:
    """Camera-frame frustum samples, shared read-only between queries.

    ``samples[i, j]`` is the j-th sample on ray i; depths (camera z) increase
    with j and are the same for every ray.
    """

    r: int
    s: int
    d_min: float
    d_max: float
    voxel_size: float
    grid_step: float
    samples: np.ndarray
    pixel_grid: np.ndarray
    depths: np.ndarray


def _grid_axis(extent: int, step: float) -> np.ndarray:
    # As many cell centres as an anchor at step/2 allows, then centred in
    # the image so that a single sample lands mid-image.
    count = math.ceil((extent - step / 2) / step) if step / 2 < extent else 0
    if count <= 0:
        return np.empty(0)
    first = (extent - (count - 1) * step) / 2
    return first + step * np.arange(count)


def build_ray_template(cam: CameraModel, grid_step: float = DEFAULT_GRID_STEP,
                       d_min: float = DEFAULT_D_MIN, d_max: float = DEFAULT_D_MAX,
                       voxel_size: float = 2.0) -> RayTemplate:
    """Sample the frustum on a regular pixel grid.

    All rays share one list of depths. The sample count is the smallest
    for which the Euclidean gap between neighbours on the most oblique ray
    is still at most ``voxel_size``, so no ray can step over a voxel.
    """
    if not (0 < d_min < d_max) or not math.isfinite(d_max):
        raise ValueError(f"need 0 < d_min < d_max, got d_min={d_min}, d_max={d_max}")
    if not grid_step >= 1:
        raise ValueError(f"grid_step must be >= 1, got {grid_step}")
    if not voxel_size > 0:
        raise ValueError(f"voxel_size must be > 0, got {voxel_size}")

    us = _grid_axis(cam.width, grid_step)
    vs = _grid_axis(cam.height, grid_step)
    if us.size == 0 or vs.size == 0:
        raise ValueError(f"grid_step {grid_step} leaves no sampled pixels")
    uu, vv = np.meshgrid(us, vs)
    pixels = np.column_stack([uu.ravel(), vv.ravel()])

    # Bearings scaled to unit depth; their norm converts depth steps to arc length.
    bearings = np.column_stack([(pixels[:, 0] - cam.cx) / cam.fx,
                                (pixels[:, 1] - cam.cy) / cam.fy,
                                np.ones(len(pixels))])
    stretch = float(np.max(np.linalg.norm(bearings, axis=1)))
    s = math.ceil((d_max - d_min) * stretch / voxel_size - 1e-12) + 1
    depths = np.linspace(d_min, d_max, s)
    samples = bearings[:, None, :] * depths[None, :, None]

    for arr in (samples, pixels, depths):
        arr.setflags(write=False)
    return RayTemplate(len(pixels), s, float(d_min), float(d_max), float(voxel_size),
                       float(grid_step), samples, pixels, depths)


@dataclass
class VisibleSet:
    """Result of a visibility query.

    ``hit_rays[k]`` is the first ray that reached ``voxels_hit[k]``, whose
    points are ``voxel_points[k]``; ``points`` concatenates them in order.
    """

    points: list[MapPoint] = field(default_factory=list)
    voxels_hit: list[VoxelKey] = field(default_factory=list)
    hit_rays: list[int] = field(default_factory=list)
    voxel_points: list[list[MapPoint]] = field(default_factory=list)
    probes: int = 0
    lookups: int = 0

    def point_ids(self) -> set[int]:
        return {p.id for p in self.points}


def query_visible(vmap: VoxelMap, template: RayTemplate, pose: Pose,
                  first_hit_only: bool = True) -> VisibleSet:
    """Collect the points of voxels seen by the template rays at ``pose``.

    With ``first_hit_only`` each ray stops at its first non-empty voxel and
    farther voxels on that ray count as occluded. A voxel is looked up in
    the hash table at most once per query; ``probes`` still counts every
    sample position examined.
    """
    if not math.isclose(template.voxel_size, vmap.config.voxel_size,
                        rel_tol=1e-12, abs_tol=0.0):
        raise ConfigurationError(
            f"template built for voxel_size={template.voxel_size}, "
            f"map uses {vmap.config.voxel_size}")

    world = pose.to_world(template.samples)
    keys = np.floor(world / vmap.config.voxel_size).astype(np.int64).tolist()

    out = VisibleSet()
    cache: dict[tuple, object] = {}
    returned: set[tuple] = set()
    get_voxel = vmap.get_voxel
    probes = 0
    for ray_id, ray in enumerate(keys):
        for ijk in ray:
            probes += 1
            key = (ijk[0], ijk[1], ijk[2])
            if key in cache:
                voxel = cache[key]
            else:
                voxel = cache[key] = get_voxel(key)
            if voxel is None:
                continue
            if key not in returned:
                returned.add(key)
                out.voxels_hit.append(voxel.key)
                out.hit_rays.append(ray_id)
                pts = list(voxel.points)
                out.voxel_points.append(pts)
                out.points.extend(pts)
            if first_hit_only:
                break
    out.probes = probes
    out.lookups = len(cache)
    return out


def write_result_csv(path: str | Path, rows: Iterable[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_CSV_HEADER)
        writer.writerows(rows)


def visible_rows(vis: VisibleSet, pose: Pose) -> list[tuple]:
    """Result-CSV rows, one per returned point; depth is camera-frame z."""
    rows = []
    for ray_id, key, pts in zip(vis.hit_rays, vis.voxels_hit, vis.voxel_points):
        if not pts:
            continue
        depths = pose.to_camera(np.array([p.position for p in pts]))[:, 2]
        for p, d in zip(pts, depths):
            rows.append((ray_id, key.ix, key.iy, key.iz, p.id, repr(float(d))))
    return rows


def occlusion_violations(vmap: VoxelMap, template: RayTemplate, pose: Pose,
                         vis: VisibleSet) -> int:
    """Points returned through a ray that meets a different non-empty voxel
    first.

    Each ``(ray, voxel)`` attribution in ``vis`` is re-checked by probing
    the whole ray again. Zero for any first-hit query.
    """
    world = pose.to_world(template.samples)
    keys = np.floor(world / vmap.config.voxel_size).astype(np.int64)
    bad = 0
    for ray_id, key, pts in zip(vis.hit_rays, vis.voxels_hit, vis.voxel_points):
        for ijk in keys[ray_id].tolist():
            k = tuple(ijk)
            if k == tuple(key):
                break
            if vmap.get_voxel(k) is not None:
                bad += len(pts)
                break
    return bad

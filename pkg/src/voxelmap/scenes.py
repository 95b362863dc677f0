"""Synthetic scenes, camera trajectories and the brute-force visibility oracle.

World frame is z-up. Randomness comes from Philox streams keyed by
``(seed, stream, segment)`` so any part of a scene can be regenerated on its
own and long walls share their first metres with short ones.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .camera import CameraModel, Pose, project_point
from .core import DEFAULT_TABLE_SIZE, MapPoint, read_snapshot, write_snapshot

DESCRIPTION_BYTES = 8


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


@dataclass(frozen=True)
class WallParams:
    length_m: float
    n_points: int
    height_m: float = 4.0


@dataclass(frozen=True)
class CorridorParams:
    """U-shaped corridor: two parallel legs joined by a connector at +x.

    Leg A runs along y = 0, leg B along y = width + inner_thickness; the
    solid block between them has faces ``inner_south``/``inner_north``.
    """

    leg_length_m: float = 40.0
    width_m: float = 6.0
    density: float = 10.0  # points per metre of wall length
    height_m: float = 4.0
    inner_thickness_m: float = 6.0
    camera_height_m: float = 2.0
    turn_setback_m: float = 4.0
    n_poses: int = 30


@dataclass(frozen=True)
class RandomBoxParams:
    extent: float = 20.0
    count: int = 2000


GeneratorParams = Union[WallParams, CorridorParams, RandomBoxParams]
_GENERATORS = {"wall": WallParams, "corridor": CorridorParams, "random_box": RandomBoxParams}


@dataclass(frozen=True)
class WallRect:
    """Vertical rectangle above the segment ``a``-``b`` (x, y), z in [z0, z1]."""

    name: str
    a: tuple[float, float]
    b: tuple[float, float]
    z0: float
    z1: float

    @property
    def length(self) -> float:
        return math.dist(self.a, self.b)


@dataclass
class Scene:
    points: list[MapPoint]
    generator: GeneratorParams
    seed: int
    labels: list[str] = field(default_factory=list)
    walls: list[WallRect] = field(default_factory=list)

    def __post_init__(self):
        self.positions = np.array([p.position for p in self.points], dtype=float).reshape(-1, 3)
        self.index = {p.id: i for i, p in enumerate(self.points)}

    def __len__(self):
        return len(self.points)

    def ids_with_label(self, *labels: str) -> set[int]:
        wanted = set(labels)
        return {p.id for p, lab in zip(self.points, self.labels) if lab in wanted}

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.positions.min(axis=0), self.positions.max(axis=0)


@dataclass
class Trajectory:
    poses: list[Pose]
    description: dict
    turn_index: int | None = None


def _points_on_wall(wall: WallRect, count: int, rng: np.random.Generator, s0=0.0, s1=None):
    # s0, s1: distance along the wall in metres
    a, b = np.asarray(wall.a), np.asarray(wall.b)
    length = float(np.linalg.norm(b - a))
    s = rng.uniform(s0, length if s1 is None else s1, count)
    z = rng.uniform(wall.z0, wall.z1, count)
    desc = rng.bytes(DESCRIPTION_BYTES * count)
    xy = a + s[:, None] * ((b - a) / length)
    return np.column_stack([xy, z]), desc


def _to_points(positions: np.ndarray, descs: bytes, first_id: int) -> list[MapPoint]:
    return [MapPoint(tuple(pos), descs[i * DESCRIPTION_BYTES:(i + 1) * DESCRIPTION_BYTES], first_id + i)
            for i, pos in enumerate(positions.tolist())]


def make_wall_scene(length_m: float, n_points: int, seed: int = 0, height_m: float = 4.0) -> Scene:
    """Points scattered uniformly on the wall x in [0, length], y = 0, z in [0, height].

    The wall is generated in one-metre segments with independent streams,
    so at equal density a longer wall extends a shorter one point-for-point.
    """
    if not length_m > 0:
        raise ValueError(f"length_m must be > 0, got {length_m}")
    if n_points < 0:
        raise ValueError(f"n_points must be >= 0, got {n_points}")
    wall = WallRect("wall", (0.0, 0.0), (float(length_m), 0.0), 0.0, float(height_m))
    params = WallParams(float(length_m), int(n_points), float(height_m))
    n_seg = math.ceil(length_m)
    bounds = [min(n_points, math.floor(n_points * min(i, length_m) / length_m + 1e-9))
              for i in range(n_seg + 1)]
    bounds[-1] = n_points
    points: list[MapPoint] = []
    for i in range(n_seg):
        count = bounds[i + 1] - bounds[i]
        if count <= 0:
            continue
        rng = _rng(seed, 0, i)
        pos, desc = _points_on_wall(wall, count, rng, float(i), float(min(i + 1, length_m)))
        points.extend(_to_points(pos, desc, len(points)))
    return Scene(points, params, seed, ["wall"] * len(points), [wall])


def wall_trajectory(n_poses: int = 10, offset_m: float = 5.0, x_start: float = 10.0,
                    x_end: float = 90.0, height_m: float = 2.0) -> Trajectory:
    """Poses on a line parallel to the wall, each looking straight at it."""
    if n_poses < 1:
        raise ValueError(f"n_poses must be >= 1, got {n_poses}")
    xs = np.linspace(x_start, x_end, n_poses) if n_poses > 1 else np.array([x_start])
    poses = [Pose.from_yaw((x, -offset_m, height_m), math.pi / 2) for x in xs]
    return Trajectory(poses, {"kind": "LineParallelToWall", "offset_m": offset_m,
                              "n_poses": n_poses})


def wall_keyframe_poses(length_m: float, n_keyframes: int, offset_m: float = 5.0,
                        height_m: float = 2.0) -> list[Pose]:
    """Keyframe centres spread evenly along the wall."""
    xs = (np.arange(n_keyframes) + 0.5) * length_m / n_keyframes
    return [Pose.from_yaw((x, -offset_m, height_m), math.pi / 2) for x in xs]


def corridor_walls(p: CorridorParams) -> list[WallRect]:
    L, w, T, h = p.leg_length_m, p.width_m, p.inner_thickness_m, p.height_m
    south, north = -w / 2, 1.5 * w + T
    return [
        WallRect("outer_south", (0.0, south), (L + w, south), 0.0, h),
        WallRect("outer_east", (L + w, south), (L + w, north), 0.0, h),
        WallRect("outer_north", (L + w, north), (0.0, north), 0.0, h),
        WallRect("inner_south", (0.0, w / 2), (L, w / 2), 0.0, h),
        WallRect("inner_east", (L, w / 2), (L, w / 2 + T), 0.0, h),
        WallRect("inner_north", (L, w / 2 + T), (0.0, w / 2 + T), 0.0, h),
    ]


def corridor_turn_pose(p: CorridorParams) -> Pose:
    """End of leg A, camera turned towards leg B and facing the inner block."""
    return Pose.from_yaw((p.leg_length_m - p.turn_setback_m, 0.0, p.camera_height_m), math.pi / 2)


def make_corridor_scene(params: CorridorParams | None = None, seed: int = 0) -> Scene:
    """Points on the corridor walls at ``density`` points per metre of wall.

    Raises:
        ValueError: if, from the turn pose, the optical axis does not cross
            the near inner wall and then a farther wall (no occlusion to test).
    """
    p = params if params is not None else CorridorParams()
    if min(p.leg_length_m, p.width_m, p.height_m, p.inner_thickness_m) <= 0 or p.density < 0:
        raise ValueError(f"corridor dimensions must be positive: {p}")
    walls = corridor_walls(p)
    points: list[MapPoint] = []
    labels: list[str] = []
    for k, wall in enumerate(walls):
        count = int(round(p.density * wall.length))
        pos, desc = _points_on_wall(wall, count, _rng(seed, 1, k))
        points.extend(_to_points(pos, desc, len(points)))
        labels.extend([wall.name] * count)
    scene = Scene(points, p, seed, labels, walls)

    pose = corridor_turn_pose(p)
    axis = pose.rotation[:, 2]
    hits = sorted((t, w.name) for w in walls
                  if (t := _ray_wall_distance(pose.translation, axis, w)) is not None)
    if len(hits) < 2 or hits[0][1] != "inner_south":
        raise ValueError(f"corridor {p} has no near/far wall pair on the turn-pose axis: {hits}")
    return scene


def _ray_wall_distance(origin, direction, wall: WallRect):
    a, b = np.asarray(wall.a), np.asarray(wall.b)
    e = b - a
    d = np.asarray(direction[:2])
    denom = d[0] * e[1] - d[1] * e[0]
    if abs(denom) < 1e-12:
        return None
    diff = a - np.asarray(origin[:2])
    t = (diff[0] * e[1] - diff[1] * e[0]) / denom
    u = (diff[0] * d[1] - diff[1] * d[0]) / denom
    z = origin[2] + t * direction[2]
    if t > 0 and 0 <= u <= 1 and wall.z0 <= z <= wall.z1:
        return t
    return None


def make_corridor_trajectory(params: CorridorParams | None = None) -> Trajectory:
    """Poses along the corridor spine: leg A, connector, leg B.

    The view yaws from +x to +y over the six metres before the turn pose,
    holds through the connector, then yaws to -x entering leg B. The turn
    pose is always one of the poses (``turn_index``).
    """
    p = params if params is not None else CorridorParams()
    if p.n_poses < 2:
        raise ValueError(f"n_poses must be >= 2, got {p.n_poses}")
    L, w, T = p.leg_length_m, p.width_m, p.inner_thickness_m
    corner1 = L + w / 2
    leg_b_y = w + T
    total = corner1 + leg_b_y + corner1
    s_turn = L - p.turn_setback_m
    ramp = 6.0

    k_turn = min(max(1, round(s_turn / total * (p.n_poses - 1))), p.n_poses - 2)
    arc = np.concatenate([np.linspace(0.0, s_turn, k_turn + 1),
                          np.linspace(s_turn, total, p.n_poses - k_turn)[1:]])

    def place(s):
        if s <= corner1:
            return s, 0.0
        if s <= corner1 + leg_b_y:
            return corner1, s - corner1
        return corner1 - (s - corner1 - leg_b_y), leg_b_y

    def yaw(s):
        s_b = corner1 + leg_b_y
        if s <= s_turn - ramp:
            return 0.0
        if s <= s_turn:
            return (s - (s_turn - ramp)) / ramp * math.pi / 2
        if s <= s_b:
            return math.pi / 2
        return math.pi / 2 + min(1.0, (s - s_b) / ramp) * math.pi / 2

    poses = []
    for s in arc:
        x, y = place(s)
        poses.append(Pose.from_yaw((x, y, p.camera_height_m), yaw(s)))
    poses[k_turn] = corridor_turn_pose(p)
    return Trajectory(poses, {"kind": "CorridorTurn", "n_poses": p.n_poses}, turn_index=k_turn)


def make_random_box_scene(extent: float = 20.0, count: int = 2000, seed: int = 0) -> Scene:
    """Points uniform in the cube [-extent/2, extent/2]^3."""
    if not extent > 0 or count < 0:
        raise ValueError(f"need extent > 0 and count >= 0, got {extent}, {count}")
    rng = _rng(seed, 2, 0)
    pos = rng.uniform(-extent / 2, extent / 2, size=(count, 3))
    desc = rng.bytes(DESCRIPTION_BYTES * count)
    return Scene(_to_points(pos, desc, 0), RandomBoxParams(float(extent), int(count)), seed,
                 ["box"] * count, [])


def random_box_poses(n: int, seed: int, extent: float = 20.0) -> list[Pose]:
    """Cameras outside the box, 1.25 to 1.75 extents from its centre, aimed
    at a random point of its central half."""
    rng = _rng(seed, 3, 0)
    poses = []
    for _ in range(n):
        radius = rng.uniform(1.25, 1.75) * extent
        azimuth = rng.uniform(-math.pi, math.pi)
        elevation = rng.uniform(-math.pi / 3, math.pi / 3)
        eye = radius * np.array([math.cos(elevation) * math.cos(azimuth),
                                 math.cos(elevation) * math.sin(azimuth),
                                 math.sin(elevation)])
        target = rng.uniform(-extent / 4, extent / 4, 3)
        poses.append(Pose.look_at(eye, target))
    return poses


def brute_force_visible(scene: Scene | Sequence[MapPoint], cam: CameraModel, pose: Pose,
                        d_min: float, d_max: float) -> list[MapPoint]:
    """Every point that projects into the image with depth in [d_min, d_max].

    Tests each point on its own; O(number of points).
    """
    points = scene.points if isinstance(scene, Scene) else scene
    out = []
    for p in points:
        proj = project_point(cam, pose, p.position)
        if proj is not None and d_min <= proj[2] <= d_max:
            out.append(p)
    return out


def occluded_mask(scene: Scene, eye, positions: np.ndarray, labels: Sequence[str]) -> np.ndarray:
    """True where the sight line from ``eye`` to a point crosses a scene wall
    other than the point's own, before reaching the point."""
    eye = np.asarray(eye, dtype=float)
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    labels = np.asarray(labels)
    out = np.zeros(len(positions), dtype=bool)
    d = positions - eye
    for wall in scene.walls:
        a, b = np.asarray(wall.a), np.asarray(wall.b)
        e = b - a
        denom = d[:, 0] * e[1] - d[:, 1] * e[0]
        ok = np.abs(denom) > 1e-12
        diff = a - eye[:2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (diff[0] * e[1] - diff[1] * e[0]) / denom
            u = (diff[0] * d[:, 1] - diff[1] * d[:, 0]) / denom
        z = eye[2] + t * d[:, 2]
        crosses = ok & (t > 0) & (t < 1 - 1e-9) & (u >= 0) & (u <= 1) & (z >= wall.z0) & (z <= wall.z1)
        out |= crosses & (labels != wall.name)
    return out


def save_scene(scene: Scene, path: str | Path, voxel_size: float = 2.0,
               table_size_n: int = DEFAULT_TABLE_SIZE) -> Path:
    """Write ``path`` (voxelmap-v1 points) and ``path.json`` (generator sidecar).

    Sidecar keys: ``format``, ``generator`` (``kind`` plus the generator's
    parameters), ``seed``, ``labels`` (one per point, file order).
    """
    path = Path(path)
    write_snapshot(path, scene.points, voxel_size, table_size_n)
    kind = next(k for k, cls in _GENERATORS.items() if isinstance(scene.generator, cls))
    sidecar = {"format": "voxelmap-v1", "generator": {"kind": kind, **asdict(scene.generator)},
               "seed": scene.seed, "labels": list(scene.labels)}
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(sidecar, indent=1))
    return side


def load_scene(path: str | Path) -> Scene:
    path = Path(path)
    _, _, points = read_snapshot(path)
    sidecar = json.loads(path.with_name(path.name + ".json").read_text())
    gen = dict(sidecar["generator"])
    params = _GENERATORS[gen.pop("kind")](**gen)
    labels = sidecar.get("labels") or [""] * len(points)
    if len(labels) != len(points):
        raise ValueError(f"{path}: {len(points)} points but {len(labels)} labels")
    walls = corridor_walls(params) if isinstance(params, CorridorParams) else []
    if isinstance(params, WallParams):
        walls = [WallRect("wall", (0.0, 0.0), (params.length_m, 0.0), 0.0, params.height_m)]
    return Scene(points, params, sidecar["seed"], labels, walls)

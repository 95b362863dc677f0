"""Voxel-hashing point map.

Map points live in cubic voxels of edge ``voxel_size``. Allocated voxels are
kept in a fixed array of buckets; a voxel is placed in the bucket given by
:func:`hash_key`, and buckets are scanned linearly to resolve collisions.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

# Classical spatial-hashing primes.
P1 = 73856093
P2 = 19349663
P3 = 83492791

DEFAULT_TABLE_SIZE = 100003
_MASK64 = (1 << 64) - 1

SNAPSHOT_MAGIC = "voxelmap-v1"


class VoxelKey(NamedTuple):
    ix: int
    iy: int
    iz: int


@dataclass(frozen=True)
class MapPoint:
    """A world-frame 3D point with an uninterpreted description payload."""

    position: tuple[float, float, float]
    description: bytes = b""
    id: int = 0

    def __post_init__(self):
        pos = tuple(float(c) for c in self.position)
        if len(pos) != 3:
            raise ValueError(f"position must have 3 components, got {len(pos)}")
        if not all(math.isfinite(c) for c in pos):
            raise ValueError(f"position must be finite, got {pos}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "description", bytes(self.description))


@dataclass
class Voxel:
    key: VoxelKey
    points: list[MapPoint] = field(default_factory=list)


@dataclass(frozen=True)
class VoxelMapConfig:
    """Map parameters.

    ``table_size_n`` is the hash modulus (number of buckets).
    ``bucket_capacity_hint`` is recorded for snapshots and stats only; Python
    lists grow on demand so nothing is reserved up front.
    ``position_epsilon`` is the per-axis absolute tolerance under which two
    positions are treated as the same point.
    """

    voxel_size: float = 2.0
    table_size_n: int = DEFAULT_TABLE_SIZE
    bucket_capacity_hint: int = 1
    position_epsilon: float = 1e-6
    primes: tuple[int, int, int] = (P1, P2, P3)

    def __post_init__(self):
        if not (math.isfinite(self.voxel_size) and self.voxel_size > 0):
            raise ValueError(f"voxel_size must be > 0, got {self.voxel_size}")
        if self.table_size_n < 1:
            raise ValueError(f"table_size_n must be >= 1, got {self.table_size_n}")
        if self.bucket_capacity_hint < 1:
            raise ValueError(
                f"bucket_capacity_hint must be >= 1, got {self.bucket_capacity_hint}")
        if not self.position_epsilon >= 0:
            raise ValueError(
                f"position_epsilon must be >= 0, got {self.position_epsilon}")


class InsertOutcome(enum.Enum):
    CREATED_VOXEL = "created-voxel"
    APPENDED = "appended"
    UPDATED_DESCRIPTION = "updated-description"


@dataclass(frozen=True)
class MapStats:
    point_count: int
    voxel_count: int
    max_bucket_length: int
    mean_bucket_length: float


def voxel_key(position: Sequence[float], voxel_size: float) -> VoxelKey:
    """Integer cell of ``position``; each voxel covers ``[i*s, (i+1)*s)`` per axis."""
    x, y, z = position
    return VoxelKey(math.floor(x / voxel_size),
                    math.floor(y / voxel_size),
                    math.floor(z / voxel_size))


def hash_key(key: Sequence[int], config: VoxelMapConfig) -> int:
    """Bucket index of ``key``.

    Signed coordinates are reinterpreted as 64-bit two's complement and each
    product wraps modulo 2**64 before the XOR and the final ``mod n``.
    """
    ix, iy, iz = key
    p1, p2, p3 = config.primes
    h = ((ix * p1) & _MASK64) ^ ((iy * p2) & _MASK64) ^ ((iz * p3) & _MASK64)
    return h % config.table_size_n


def _same_position(a, b, eps):
    return (abs(a[0] - b[0]) <= eps and abs(a[1] - b[1]) <= eps
            and abs(a[2] - b[2]) <= eps)


class VoxelMap:
    """Bucketed hash table of voxels.

    Not internally synchronised: mutations need exclusive access, reads may
    share the map with other reads.
    """

    def __init__(self, config: VoxelMapConfig | None = None):
        self.config = config if config is not None else VoxelMapConfig()
        self.buckets: list[list[Voxel]] = [[] for _ in range(self.config.table_size_n)]
        self.point_count = 0
        self.voxel_count = 0
        self._id_index: dict[int, VoxelKey] = {}

    def __len__(self):
        return self.point_count

    def __contains__(self, point_id):
        return point_id in self._id_index

    def key_of(self, position: Sequence[float]) -> VoxelKey:
        return voxel_key(position, self.config.voxel_size)

    def _bucket(self, key) -> list[Voxel]:
        return self.buckets[hash_key(key, self.config)]

    def get_voxel(self, key: Sequence[int]) -> Voxel | None:
        """Voxel stored under ``key`` or None; one bucket scan."""
        for voxel in self._bucket(key):
            if voxel.key == key:
                return voxel
        return None

    def query_voxel(self, position: Sequence[float]) -> Voxel | None:
        return self.get_voxel(self.key_of(position))

    def insert_point(self, point: MapPoint) -> InsertOutcome:
        """Insert ``point``, or overwrite the description and id of a point
        already at the same position (within ``position_epsilon``).

        Raises:
            ValueError: if ``point.id`` is already held by a different point.
        """
        key = self.key_of(point.position)
        bucket = self._bucket(key)
        voxel = None
        for candidate in bucket:
            if candidate.key == key:
                voxel = candidate
                break

        if voxel is not None:
            eps = self.config.position_epsilon
            for i, existing in enumerate(voxel.points):
                if _same_position(existing.position, point.position, eps):
                    if point.id != existing.id and point.id in self._id_index:
                        raise ValueError(f"point id {point.id} already in map")
                    voxel.points[i] = MapPoint(existing.position, point.description, point.id)
                    del self._id_index[existing.id]
                    self._id_index[point.id] = key
                    return InsertOutcome.UPDATED_DESCRIPTION

        if point.id in self._id_index:
            raise ValueError(f"point id {point.id} already in map")

        if voxel is None:
            bucket.append(Voxel(key, [point]))
            self.voxel_count += 1
            outcome = InsertOutcome.CREATED_VOXEL
        else:
            voxel.points.append(point)
            outcome = InsertOutcome.APPENDED
        self.point_count += 1
        self._id_index[point.id] = key
        return outcome

    def insert_points(self, points: Iterable[MapPoint]) -> None:
        for p in points:
            self.insert_point(p)

    def delete_point(self, position: Sequence[float], point_id: int) -> bool:
        """Remove the point ``point_id`` from the voxel covering ``position``.

        Empty voxels are deallocated. Returns False if no such point exists.
        """
        key = self.key_of(position)
        bucket = self._bucket(key)
        for vi, voxel in enumerate(bucket):
            if voxel.key != key:
                continue
            for pi, p in enumerate(voxel.points):
                if p.id == point_id:
                    del voxel.points[pi]
                    del self._id_index[point_id]
                    self.point_count -= 1
                    if not voxel.points:
                        del bucket[vi]
                        self.voxel_count -= 1
                    return True
            return False
        return False

    def voxels(self) -> Iterator[Voxel]:
        for bucket in self.buckets:
            yield from bucket

    def points(self) -> Iterator[MapPoint]:
        for voxel in self.voxels():
            yield from voxel.points

    def stats(self) -> MapStats:
        """Counts from a full traversal.

        ``mean_bucket_length`` averages over occupied buckets only, so it
        reads as the mean collision-chain length.
        """
        points = voxels = longest = occupied = 0
        for bucket in self.buckets:
            if not bucket:
                continue
            occupied += 1
            voxels += len(bucket)
            longest = max(longest, len(bucket))
            for voxel in bucket:
                points += len(voxel.points)
        mean = voxels / occupied if occupied else 0.0
        return MapStats(points, voxels, longest, mean)

    def save(self, path: str | Path) -> None:
        write_snapshot(path, self.points(), self.config.voxel_size, self.config.table_size_n)

    @classmethod
    def load(cls, path: str | Path, **config_overrides) -> "VoxelMap":
        voxel_size, n, points = read_snapshot(path)
        config = VoxelMapConfig(voxel_size=voxel_size, table_size_n=n, **config_overrides)
        vmap = cls(config)
        vmap.insert_points(points)
        return vmap


def write_snapshot(path: str | Path, points: Iterable[MapPoint],
                   voxel_size: float, table_size_n: int) -> None:
    """Write points in the ``voxelmap-v1`` line format.

    Header ``voxelmap-v1 voxel_size=<f> n=<int>``, then one
    ``id x y z <hex description>`` line per point. Floats use ``repr`` so a
    reload is bit-exact.
    """
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{SNAPSHOT_MAGIC} voxel_size={voxel_size!r} n={table_size_n}\n")
        for p in points:
            x, y, z = p.position
            fh.write(f"{p.id} {x!r} {y!r} {z!r} {p.description.hex()}\n")


def read_snapshot(path: str | Path) -> tuple[float, int, list[MapPoint]]:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if not header or header[0] != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a {SNAPSHOT_MAGIC} file")
        fields = dict(item.split("=", 1) for item in header[1:])
        try:
            voxel_size = float(fields["voxel_size"])
            n = int(fields["n"])
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{path}: bad header {' '.join(header)!r}") from exc
        points = []
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) not in (4, 5):
                raise ValueError(f"{path}:{lineno}: expected 'id x y z [hex]'")
            desc = bytes.fromhex(parts[4]) if len(parts) == 5 else b""
            points.append(MapPoint((float(parts[1]), float(parts[2]), float(parts[3])),
                                   desc, int(parts[0])))
    return voxel_size, n, points

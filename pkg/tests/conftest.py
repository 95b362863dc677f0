import numpy as np
import pytest

from voxelmap import CameraModel, MapPoint, VoxelMap, VoxelMapConfig

PRIMES = np.array([73856093, 19349663, 83492791], dtype=np.uint64)


def reference_hash(key, n, primes=PRIMES):
    """Hash evaluated with numpy uint64 wraparound, independent of the library."""
    k = np.array(key, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        m = k * np.asarray(primes, dtype=np.uint64)
    return int((m[0] ^ m[1] ^ m[2]) % np.uint64(n))


@pytest.fixture
def cam():
    return CameraModel()


@pytest.fixture
def small_map():
    vmap = VoxelMap(VoxelMapConfig(voxel_size=2.0))
    vmap.insert_point(MapPoint((1.0, 1.0, 1.0), b"a", 1))
    return vmap


def full_check(vmap):
    """Recompute every map invariant from scratch."""
    from voxelmap.core import hash_key, voxel_key

    points = voxels = 0
    ids = set()
    for b, bucket in enumerate(vmap.buckets):
        keys = [v.key for v in bucket]
        assert len(keys) == len(set(keys)), "duplicate key in bucket"
        for voxel in bucket:
            assert hash_key(voxel.key, vmap.config) == b
            assert voxel.points, "empty voxel left allocated"
            voxels += 1
            for p in voxel.points:
                assert voxel_key(p.position, vmap.config.voxel_size) == voxel.key
                assert p.id not in ids
                ids.add(p.id)
                points += 1
    assert points == vmap.point_count
    assert voxels == vmap.voxel_count
    return points, voxels


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Call the returned function with (ok, detail) before asserting."""
    def record(ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {request.node.name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

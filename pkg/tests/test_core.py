import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxelmap.core import (InsertOutcome, MapPoint, VoxelKey, VoxelMap, VoxelMapConfig, hash_key,
                           read_snapshot, voxel_key)

from conftest import full_check, reference_hash


class TestHashKey:
    def test_origin_is_zero(self):
        for n in (1, 7, 100003):
            assert hash_key((0, 0, 0), VoxelMapConfig(table_size_n=n)) == 0

    def test_unit_x(self):
        # 73856093 mod 10
        assert hash_key((1, 0, 0), VoxelMapConfig(table_size_n=10)) == 3

    def test_negative_coordinates_frozen(self):
        # Frozen from the uint64 reference evaluation.
        assert hash_key((-1, 2, -3), VoxelMapConfig(table_size_n=1024)) == 582
        assert hash_key((5, -7, 11), VoxelMapConfig(table_size_n=100003)) == 41203

    @given(st.tuples(*[st.integers(-2**31, 2**31)] * 3), st.integers(1, 2**20))
    def test_matches_reference(self, key, n):
        assert hash_key(key, VoxelMapConfig(table_size_n=n)) == reference_hash(key, n)

    @given(st.tuples(*[st.integers(-10**6, 10**6)] * 3), st.integers(1, 5000))
    def test_in_range(self, key, n):
        assert 0 <= hash_key(key, VoxelMapConfig(table_size_n=n)) < n


class TestVoxelKey:
    @pytest.mark.parametrize("pos,size,expected", [
        ((1.0, 1.0, 1.0), 2.0, (0, 0, 0)),
        ((2.0, 0.0, -0.0), 2.0, (1, 0, 0)),
        ((-0.1, -2.0, -2.1), 2.0, (-1, -1, -2)),
        ((0.49, 0.5, 0.51), 0.5, (0, 1, 1)),
    ])
    def test_floor_cells(self, pos, size, expected):
        assert voxel_key(pos, size) == expected

    @given(st.tuples(*[st.floats(-1e4, 1e4)] * 3), st.floats(0.01, 50))
    def test_position_inside_cell(self, pos, size):
        key = voxel_key(pos, size)
        for c, i in zip(pos, key):
            assert i * size <= c + 1e-9 * max(1.0, abs(c))
            assert c < (i + 1) * size + 1e-9 * max(1.0, abs(c))


class TestInsert:
    def test_first_insert_creates_voxel(self):
        vmap = VoxelMap(VoxelMapConfig(voxel_size=2.0))
        p = MapPoint((1.0, 1.0, 1.0), b"a", 1)
        assert vmap.insert_point(p) is InsertOutcome.CREATED_VOXEL
        voxel = vmap.get_voxel((0, 0, 0))
        assert voxel is not None and voxel.points == [p]

    def test_same_cell_appends(self, small_map):
        out = small_map.insert_point(MapPoint((1.5, 0.5, 0.5), b"b", 2))
        assert out is InsertOutcome.APPENDED
        assert len(small_map.get_voxel((0, 0, 0)).points) == 2
        assert small_map.voxel_count == 1 and small_map.point_count == 2

    def test_same_position_updates_description(self, small_map):
        out = small_map.insert_point(MapPoint((1.0, 1.0, 1.0), b"new", 3))
        assert out is InsertOutcome.UPDATED_DESCRIPTION
        assert small_map.point_count == 1
        (p,) = small_map.get_voxel((0, 0, 0)).points
        assert p.description == b"new" and p.id == 3
        assert 1 not in small_map and 3 in small_map

    def test_update_within_epsilon(self, small_map):
        out = small_map.insert_point(MapPoint((1.0 + 5e-7, 1.0, 1.0 - 5e-7), b"x", 1))
        assert out is InsertOutcome.UPDATED_DESCRIPTION
        out = small_map.insert_point(MapPoint((1.0 + 2e-6, 1.0, 1.0), b"y", 9))
        assert out is InsertOutcome.APPENDED

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, small_map, bad):
        with pytest.raises(ValueError):
            small_map.insert_point(MapPoint((bad, 0.0, 0.0), b"", 7))
        assert small_map.point_count == 1

    def test_duplicate_id_rejected(self, small_map):
        with pytest.raises(ValueError):
            small_map.insert_point(MapPoint((9.0, 9.0, 9.0), b"", 1))
        assert small_map.point_count == 1 and small_map.voxel_count == 1
        full_check(small_map)


class TestDelete:
    def test_roundtrip(self, small_map):
        assert small_map.delete_point((1.0, 1.0, 1.0), 1)
        assert small_map.query_voxel((1.0, 1.0, 1.0)) is None
        assert small_map.stats().point_count == 0 and small_map.voxel_count == 0

    def test_missing(self):
        vmap = VoxelMap()
        assert vmap.delete_point((3.0, 4.0, 5.0), 1) is False
        assert vmap.stats().point_count == 0

    def test_wrong_id_or_position(self, small_map):
        assert small_map.delete_point((1.0, 1.0, 1.0), 2) is False
        assert small_map.delete_point((5.0, 1.0, 1.0), 1) is False
        assert small_map.point_count == 1

    def test_one_of_two(self, small_map):
        small_map.insert_point(MapPoint((0.5, 0.5, 0.5), b"b", 2))
        before = (small_map.point_count, small_map.voxel_count)
        assert before == (2, 1)
        assert small_map.delete_point((0.5, 0.5, 0.5), 2)
        assert (small_map.point_count, small_map.voxel_count) == (1, 1)
        assert [p.id for p in small_map.get_voxel((0, 0, 0)).points] == [1]


class TestQuery:
    def test_inserted(self, small_map):
        voxel = small_map.query_voxel((1.0, 1.0, 1.0))
        assert voxel.key == VoxelKey(0, 0, 0)
        assert small_map.query_voxel((1.9, 0.1, 0.0)) is voxel

    def test_unallocated(self, small_map):
        assert small_map.query_voxel((-1.0, 1.0, 1.0)) is None
        assert VoxelMap().query_voxel((0.0, 0.0, 0.0)) is None

    def test_single_bucket_collisions(self):
        vmap = VoxelMap(VoxelMapConfig(voxel_size=1.0, table_size_n=1))
        rng = random.Random(3)
        cells = rng.sample(range(-50, 50), 100)
        pts = [MapPoint((c + 0.5, (c * 7) % 13 + 0.5, -c + 0.5), b"", i) for i, c in enumerate(cells)]
        for p in pts:
            assert vmap.insert_point(p) is InsertOutcome.CREATED_VOXEL
        assert len(vmap.buckets) == 1 and len(vmap.buckets[0]) == 100
        for p in pts:
            # linear scan oracle
            expected = [q for q in pts if voxel_key(q.position, 1.0) == voxel_key(p.position, 1.0)]
            assert vmap.query_voxel(p.position).points == expected
        full_check(vmap)


class TestStats:
    def test_empty(self):
        s = VoxelMap().stats()
        assert (s.point_count, s.voxel_count, s.max_bucket_length, s.mean_bucket_length) == (0, 0, 0, 0)

    def test_one_point(self, small_map):
        s = small_map.stats()
        assert (s.point_count, s.voxel_count) == (1, 1)
        assert s.max_bucket_length == 1 and s.mean_bucket_length == 1.0

    def test_scattered_buckets_short(self):
        rng = np.random.default_rng(0)
        vmap = VoxelMap(VoxelMapConfig(voxel_size=1.0))
        for i, pos in enumerate(rng.uniform(-500, 500, (9000, 3)).tolist()):
            vmap.insert_point(MapPoint(pos, b"", i))
        s = vmap.stats()
        assert s.point_count == 9000
        assert (s.point_count, s.voxel_count) == full_check(vmap)
        print(f"9000 points, n=100003: max bucket {s.max_bucket_length}, mean {s.mean_bucket_length:.3f}")


class TestSnapshot:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(1)
        vmap = VoxelMap(VoxelMapConfig(voxel_size=0.7, table_size_n=101))
        for i, pos in enumerate(rng.normal(0, 10, (500, 3)).tolist()):
            vmap.insert_point(MapPoint(pos, rng.bytes(i % 5), i * 3 + 1))
        path = tmp_path / "map.txt"
        vmap.save(path)
        assert path.read_text().splitlines()[0] == "voxelmap-v1 voxel_size=0.7 n=101"
        loaded = VoxelMap.load(path)
        assert loaded.stats() == vmap.stats()
        assert sorted((p.id, p.position, p.description) for p in loaded.points()) == \
            sorted((p.id, p.position, p.description) for p in vmap.points())

    def test_line_format(self, tmp_path):
        path = tmp_path / "m.txt"
        vmap = VoxelMap(VoxelMapConfig(voxel_size=2.0, table_size_n=5))
        vmap.insert_point(MapPoint((1.5, -2.25, 3.0), b"\x01\xff", 42))
        vmap.insert_point(MapPoint((7.0, 0.0, 0.0), b"", 43))
        vmap.save(path)
        lines = path.read_text().splitlines()
        assert sorted(lines[1:]) == ["42 1.5 -2.25 3.0 01ff", "43 7.0 0.0 0.0 "]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("nope\n")
        with pytest.raises(ValueError):
            read_snapshot(path)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"voxel_size": 0}, {"voxel_size": -1.0}, {"table_size_n": 0},
        {"bucket_capacity_hint": 0}, {"position_epsilon": -1e-3},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            VoxelMapConfig(**kwargs)


coords = st.floats(-60, 60, allow_nan=False, allow_infinity=False)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(coords, coords, coords), max_size=80),
           st.sampled_from([1, 3, 97]), st.sampled_from([0.5, 2.0, 7.0]))
    def test_roundtrip_and_counts(self, positions, n, size):
        vmap = VoxelMap(VoxelMapConfig(voxel_size=size, table_size_n=n))
        stored = {}
        for i, pos in enumerate(positions):
            p = MapPoint(pos, b"", i)
            out = vmap.insert_point(p)
            if out is InsertOutcome.UPDATED_DESCRIPTION:
                stored = {k: v for k, v in stored.items() if k in vmap}
            stored[i] = p
        for pid, p in stored.items():
            voxel = vmap.query_voxel(p.position)
            assert voxel is not None and pid in {q.id for q in voxel.points}
        full_check(vmap)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32), st.sampled_from([1, 2, 101]))
    def test_interleaved_ops_keep_invariants(self, seed, n):
        rng = random.Random(seed)
        vmap = VoxelMap(VoxelMapConfig(voxel_size=1.0, table_size_n=n))
        live = {}
        for step in range(200):
            if live and rng.random() < 0.4:
                pid = rng.choice(list(live))
                assert vmap.delete_point(live.pop(pid), pid)
            else:
                pos = tuple(float(rng.randint(-4, 4)) + rng.choice([0.25, 0.75]) for _ in range(3))
                out = vmap.insert_point(MapPoint(pos, b"", step))
                if out is InsertOutcome.UPDATED_DESCRIPTION:
                    live = {k: v for k, v in live.items() if k in vmap}
                live[step] = pos
        full_check(vmap)
        assert vmap.point_count == len(live)

    def test_determinism(self):
        def build():
            rng = random.Random(11)
            vmap = VoxelMap(VoxelMapConfig(voxel_size=1.5, table_size_n=13))
            for i in range(300):
                vmap.insert_point(MapPoint(tuple(rng.uniform(-20, 20) for _ in range(3)), b"", i))
                if i % 7 == 0:
                    vmap.delete_point(next(vmap.points()).position, next(vmap.points()).id)
            return vmap
        a, b = build(), build()
        assert a.stats() == b.stats()
        assert [[v.key for v in bk] for bk in a.buckets] == [[v.key for v in bk] for bk in b.buckets]

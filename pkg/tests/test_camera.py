import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxelmap.camera import CameraModel, Pose, backproject, project_point, project_points


def random_pose(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    R = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])
    return Pose(R, rng.uniform(-10, 10, 3))


class TestCameraModel:
    @pytest.mark.parametrize("kwargs", [
        {"fx": 0}, {"fy": -1}, {"cx": 640}, {"cy": -0.5}, {"width": 0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            CameraModel(**kwargs)


class TestPose:
    def test_rejects_non_rotation(self):
        with pytest.raises(ValueError):
            Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
        with pytest.raises(ValueError):
            Pose(np.eye(3) * 1.001, np.zeros(3))

    def test_from_yaw_axes(self):
        pose = Pose.from_yaw((0, 0, 0), math.pi / 2)
        # looking along +y, image down is world -z
        np.testing.assert_allclose(pose.rotation[:, 2], [0, 1, 0], atol=1e-12)
        np.testing.assert_allclose(pose.rotation[:, 1], [0, 0, -1], atol=1e-12)
        np.testing.assert_allclose(pose.rotation[:, 0], [1, 0, 0], atol=1e-12)

    def test_look_at(self):
        pose = Pose.look_at((0, 0, 0), (5, 0, 0))
        np.testing.assert_allclose(pose.rotation[:, 2], [1, 0, 0], atol=1e-12)
        with pytest.raises(ValueError):
            Pose.look_at((0, 0, 0), (0, 0, 3))

    def test_immutable(self):
        pose = Pose.identity()
        with pytest.raises(ValueError):
            pose.translation[0] = 1.0


class TestProjectPoint:
    def test_optical_axis(self, cam):
        pose = Pose.from_yaw((1.0, 2.0, 3.0), 0.3)
        point = pose.translation + 7.5 * pose.rotation[:, 2]
        u, v, d = project_point(cam, pose, point)
        assert u == pytest.approx(cam.cx, abs=1e-9)
        assert v == pytest.approx(cam.cy, abs=1e-9)
        assert d == pytest.approx(7.5)

    def test_behind_camera(self, cam):
        assert project_point(cam, Pose.identity(), (0.0, 0.0, -2.0)) is None
        assert project_point(cam, Pose.identity(), (0.0, 0.0, 0.0)) is None

    def test_outside_image(self, cam):
        # u = 500 * 1 / 1 + 320 = 820 > 640
        assert project_point(cam, Pose.identity(), (1.0, 0.0, 1.0)) is None

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_backproject_inverse(self, seed):
        rng = np.random.default_rng(seed)
        cam = CameraModel()
        pose = random_pose(rng)
        u, v = rng.uniform(0, 640), rng.uniform(0, 480)
        depth = rng.uniform(0.1, 50)
        p = backproject(cam, pose, u, v, depth)
        out = project_point(cam, pose, p)
        assert out is not None
        np.testing.assert_allclose(out, (u, v, depth), rtol=0, atol=1e-9 * max(1.0, depth))
        again = backproject(cam, pose, out[0], out[1], out[2])
        assert np.max(np.abs(again - p)) <= 1e-9

    def test_vectorised_matches_scalar(self, cam):
        rng = np.random.default_rng(5)
        pose = random_pose(rng)
        pts = pose.translation + rng.normal(0, 15, (2000, 3))
        uv, z, valid = project_points(cam, pose, pts)
        for p, ok, uvi, zi in zip(pts, valid, uv, z):
            scalar = project_point(cam, pose, p)
            assert (scalar is not None) == bool(ok)
            if ok:
                np.testing.assert_allclose(scalar, (*uvi, zi), rtol=1e-12)

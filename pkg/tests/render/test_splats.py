"""Tests for `voxfield.render.splats`."""
import numpy as np
import pytest

from voxfield.core.grid import VoxfieldGrid
from voxfield.core.voxfield import SigmaVoxfield
from voxfield.render.splats import (
    UP,
    SplatCloud,
    build_splats,
    estimate_normal,
    estimate_normals,
    tangent_frame,
)


def plane_points(normal, count=200, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    normal = np.asarray(normal, dtype=float)
    frame = tangent_frame(normal / np.linalg.norm(normal))[0]
    uv = rng.uniform(-1, 1, (count, 2))
    points = uv[:, :1] * frame[:, 0] + uv[:, 1:] * frame[:, 1]
    return points + rng.normal(0, noise, (count, 3)) + [3.0, -2.0, 1.0]


def test_horizontal_plane():
    normal, degenerate = estimate_normal(None, plane_points([0, 0, 1]))
    assert not degenerate
    assert np.allclose(normal, [0, 0, 1])


def test_vertical_plane_sign():
    """With z and y zero the x component decides the sign."""
    normal, _ = estimate_normal(None, plane_points([-1, 0, 0]))
    assert np.allclose(normal, [1, 0, 0])


def test_line_falls_back_to_up():
    line = np.outer(np.linspace(0, 1, 10), [1.0, 2.0, 0.5])
    normal, degenerate = estimate_normal(None, line)
    assert degenerate
    assert normal.tolist() == UP.tolist()


def test_too_few_neighbors():
    normal, degenerate = estimate_normal(None, [[0, 0, 0], [1, 0, 0]])
    assert degenerate
    assert normal.tolist() == [0, 0, 1]


@pytest.mark.parametrize('seed', range(5))
def test_noisy_plane_within_five_degrees(seed):
    rng = np.random.default_rng(seed + 100)
    true = rng.normal(size=3)
    true /= np.linalg.norm(true)
    normal, _ = estimate_normal(None, plane_points(true, noise=0.01, seed=seed))
    angle = np.degrees(np.arccos(min(1.0, abs(normal @ true))))
    assert angle < 5.0


def test_estimate_normals_matches_single():
    points = plane_points([0.2, 0.1, 1.0], count=40, noise=0.02)
    normals, degenerate = estimate_normals(points, k=16, radius=10.0)
    assert normals.shape == (40, 3)
    assert not degenerate.any()
    from scipy.spatial import cKDTree

    _, rows = cKDTree(points).query(points[7], k=16)
    single, _ = estimate_normal(points[7], points[rows])
    assert np.allclose(normals[7], single, atol=1e-9)


def test_isolated_point_is_degenerate():
    cluster = plane_points([0, 0, 1], count=30) * 0.1
    points = np.vstack([cluster, [[50, 50, 50]]])
    normals, degenerate = estimate_normals(points, k=8, radius=1.2)
    assert degenerate[-1]
    assert normals[-1].tolist() == [0, 0, 1]
    assert not degenerate[:-1].any()


def test_estimate_normals_empty():
    normals, degenerate = estimate_normals(np.zeros((0, 3)))
    assert normals.shape == (0, 3) and degenerate.shape == (0,)


@pytest.mark.parametrize('seed', range(5))
def test_tangent_frames_are_rotations(seed):
    normals = np.random.default_rng(seed).normal(size=(50, 3))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    normals[0] = [1, 0, 0]
    frames = tangent_frame(normals)
    for frame, normal in zip(frames, normals):
        assert np.allclose(frame.T @ frame, np.eye(3), atol=1e-12)
        assert np.linalg.det(frame) == pytest.approx(1.0)
        assert np.allclose(frame[:, 2], normal)


def test_build_splats(grid_factory):
    grid = grid_factory(voxel_count=10, n=5)
    splats = build_splats(grid, r=0.05)
    points, colors = grid.world_points()
    assert len(splats) == 50
    assert splats.radius == 0.05
    assert np.array_equal(splats.centers, points)
    assert np.array_equal(splats.colors, colors)
    assert splats.degenerate.shape == (50,)
    for rotation in splats.rotations:
        assert np.allclose(rotation.T @ rotation, np.eye(3), atol=1e-10)
        assert np.linalg.det(rotation) == pytest.approx(1.0)


def test_build_splats_flags_degenerate(caplog):
    flat = SigmaVoxfield([[0, 0, 0], [0.1, 0, 0], [0.2, 0, 0]], np.full((3, 3), 0.5))
    grid = VoxfieldGrid(0.6, 3, entries={(0, 0, 0): (flat, 0)})
    splats = build_splats(grid)
    assert splats.degenerate.all()
    assert np.allclose(splats.normals, [0, 0, 1])
    assert 'degenerate' in caplog.text


def test_cloud_accessors():
    rotations = np.tile(np.eye(3), (3, 1, 1))
    cloud = SplatCloud(np.zeros((3, 3)), rotations, 0.04, np.ones((3, 3)))
    assert len(cloud) == 3
    assert cloud[1].radius == 0.04
    assert len(cloud.to_list()) == 3
    assert len(cloud.subset([0, 2])) == 2
    assert repr(cloud) == 'SplatCloud(splats=3, radius=0.04)'

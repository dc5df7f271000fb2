"""Tests for `voxfield.core.grid`."""
import numpy as np
import pytest

from voxfield.core.grid import VoxfieldGrid, skeleton_of
from voxfield.core.voxfield import SigmaVoxfield
from voxfield.models import NULL_LABEL


def test_center_of_index():
    g = VoxfieldGrid(0.5, 1, (1.0, 2.0, 3.0))
    assert g.center_of((0, 0, 0)).tolist() == [1.25, 2.25, 3.25]
    assert g.center_of((-1, 2, 0)).tolist() == [0.75, 3.25, 3.25]


def test_index_of_point_is_half_open():
    g = VoxfieldGrid(0.5, 1)
    assert g.index_of_point((0.5, 0.0, 0.0)) == (1, 0, 0)
    assert g.index_of_point((0.49, -0.01, 0.0)) == (0, -1, 0)


def test_entries_sorted(grid_factory):
    g = grid_factory(voxel_count=10)
    assert g.indices() == sorted(g.indices())
    assert g.index_array().shape == (10, 3)
    assert len(g.labels()) == 10


def test_world_points_inside_boxes(grid_factory):
    """Every sample lies inside the box of its voxel."""
    g = grid_factory(voxel_count=8, n=5)
    points, colors = g.world_points()
    assert points.shape == (40, 3) == colors.shape
    centers = np.repeat(g.centers(), 5, axis=0)
    assert np.all(np.abs(points - centers) <= g.voxel_size / 2 + 1e-6)


def test_wrong_sample_count_rejected():
    v = SigmaVoxfield(np.zeros((2, 3)), np.full((2, 3), 0.5))
    with pytest.raises(ValueError):
        VoxfieldGrid(0.6, 3, entries={(0, 0, 0): (v, 0)})


@pytest.mark.parametrize('label', [-1, 21, 255])
def test_invalid_label_rejected(label):
    v = SigmaVoxfield(np.zeros((1, 3)), np.full((1, 3), 0.5))
    with pytest.raises(ValueError):
        VoxfieldGrid(0.6, 1, entries={(0, 0, 0): (v, label)})


def test_null_label_accepted():
    v = SigmaVoxfield(np.zeros((1, 3)), np.full((1, 3), 0.5))
    g = VoxfieldGrid(0.6, 1, entries={(0, 0, 0): (v, NULL_LABEL)})
    assert g.label_of((0, 0, 0)) == NULL_LABEL


def test_invalid_voxel_size():
    with pytest.raises(ValueError):
        VoxfieldGrid(0.0, 1)


def test_skeleton_keeps_labels(grid_factory):
    g = grid_factory(voxel_count=6)
    s = skeleton_of(g)
    assert s.n == 0
    assert s.indices() == g.indices()
    assert s.labels().tolist() == g.labels().tolist()
    assert s.world_points()[0].shape == (0, 3)


def test_with_entries_builds_new_grid(grid_factory):
    g = grid_factory(voxel_count=3, n=2)
    v = SigmaVoxfield(np.zeros((2, 3)), np.full((2, 3), 0.5))
    h = g.with_entries({(9, 9, 9): (v, 4)})
    assert len(h) == 4 and len(g) == 3
    assert h.label_of((9, 9, 9)) == 4


def test_skeleton_constructor():
    s = VoxfieldGrid.skeleton(0.6, {(0, 0, 0): 1, (1, 0, 0): 2})
    assert s.n == 0 and len(s) == 2

"""pytest fixtures which are globally available throughout the suite."""
import numpy as np
from click.testing import CliRunner

import pytest

from voxfield.core.grid import VoxfieldGrid
from voxfield.core.voxfield import SigmaVoxfield
from voxfield.ingest.synth import synth_scene
from voxfield.models import SceneSpec


def random_voxfield(rng, n, voxel_size):
    """Return a voxfield with n samples inside a voxel of the given size."""
    half = voxel_size / 2.0
    positions = rng.uniform(-half, half, size=(n, 3))
    colors = rng.uniform(0.0, 1.0, size=(n, 3))
    return SigmaVoxfield(positions, colors)


def random_grid(seed=0, voxel_count=12, n=4, voxel_size=0.6, labels=(0, 1, 2)):
    """Return a grid of voxels on random distinct cells with random samples."""
    rng = np.random.default_rng(seed)
    cells = set()
    while len(cells) < voxel_count:
        cells.add(tuple(int(v) for v in rng.integers(-5, 6, size=3)))
    entries = {
        cell: (random_voxfield(rng, n, voxel_size), labels[i % len(labels)])
        for i, cell in enumerate(sorted(cells))
    }
    return VoxfieldGrid(voxel_size, n, (0.0, 0.0, 0.0), entries)


@pytest.fixture(scope='function')
def voxfield_factory():
    """Return the random voxfield builder."""
    return random_voxfield


@pytest.fixture(scope='function')
def grid_factory():
    """Return the random grid builder."""
    return random_grid


@pytest.fixture(scope='session')
def small_scene():
    """A small procedural street scene mesh."""
    spec = SceneSpec(
        extent=(12.0, 9.0, 5.0),
        road_width=4.0,
        lane_stripe_period=4.0,
        building_count=2,
        pole_count=2,
    )
    return synth_scene(spec)


@pytest.fixture(scope='session')
def cli_runner():
    """Fixture that returns a helper function to run the voxfield cli."""
    from voxfield.__main__ import main

    runner = CliRunner()

    def cli_main(*cli_args, **cli_kwargs):
        """Run voxfield cli main with the given args."""
        return runner.invoke(main, cli_args, **cli_kwargs)

    return cli_main

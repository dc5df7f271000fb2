"""Training local sets drawn from VXF grids."""
import logging
from typing import List, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from voxfield.core.grid import VoxfieldGrid
from voxfield.core.tokens import flatten_token
from voxfield.diffusion.localset import LocalSet
from voxfield.exceptions import DimensionMismatchError, EmptyBatchError

logger = logging.getLogger(__name__)


class _GridTokens:
    """Token matrix, labels, centers and kd-tree of one grid."""

    def __init__(self, grid: VoxfieldGrid):
        self.indices = grid.index_array()
        self.labels = grid.labels()
        self.centers = grid.centers()
        self.tokens = np.stack(
            [flatten_token(grid[index][0], grid.voxel_size) for index in grid.indices()]
        )
        self.tree = cKDTree(self.centers)

    def __len__(self):
        return len(self.indices)

    def around(self, row: int, size: int) -> LocalSet:
        size = min(size, len(self))
        _, rows = self.tree.query(self.centers[row], k=size)
        rows = np.atleast_1d(rows)
        return LocalSet(
            self.indices[rows],
            self.tokens[rows],
            self.labels[rows],
            self.centers[rows],
        )


class Corpus:
    """
    A set of grids sharing one samples-per-voxel count.

    :raises EmptyBatchError: No grid holds a voxel.
    :raises DimensionMismatchError: Grids disagree on n.
    """

    def __init__(self, grids: Sequence[VoxfieldGrid]):
        grids = [g for g in grids if len(g)]
        if not grids:
            raise EmptyBatchError('training corpus holds no voxels')
        counts = sorted({g.n for g in grids})
        if len(counts) != 1 or counts[0] == 0:
            raise DimensionMismatchError(
                'corpus grids need one common n > 0, got {}'.format(counts)
            )
        self.n = counts[0]
        self.grids = [_GridTokens(g) for g in grids]
        logger.debug(
            'Corpus of %d grids, %d voxels', len(self.grids), sum(map(len, self.grids))
        )

    @property
    def token_dim(self) -> int:
        return 6 * self.n

    def sample(
        self, count: int, size_range: Tuple[int, int], rng: np.random.Generator
    ) -> List[LocalSet]:
        """Draw `count` local sets: a random voxel plus its nearest neighbours."""
        return sample_local_sets(self, count, size_range, rng)


def sample_local_sets(
    corpus: Corpus, count: int, size_range: Tuple[int, int], rng: np.random.Generator
) -> List[LocalSet]:
    """
    Draw local sets whose size is uniform in `size_range`, capped by grid size.
    """
    low, high = size_range
    sets = []
    for _ in range(count):
        grid = corpus.grids[int(rng.integers(len(corpus.grids)))]
        size = int(rng.integers(low, high + 1))
        sets.append(grid.around(int(rng.integers(len(grid))), size))
    return sets

"""Sparse world-indexed grid of Sigma-Voxfields."""
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from voxfield.core.voxfield import SigmaVoxfield
from voxfield.models import is_valid_label

Index = Tuple[int, int, int]


def as_file_float(value: float) -> float:
    """Round a float to the nearest float32 (the VXF header precision)."""
    return float(np.float32(value))


class VoxfieldGrid:
    """
    The persistent 3D scene buffer.

    Maps integer voxel indices to `(SigmaVoxfield, label)`. The center of index
    `(i, j, k)` is `origin + (i + 1/2, j + 1/2, k + 1/2) * voxel_size` and voxel
    boxes are half-open `[min, max)` per axis. A grid with `n == 0` is a
    semantic skeleton (indices and labels only).

    Grids are immutable; `with_entries` and `without_samples` build new ones.
    """

    def __init__(
        self,
        voxel_size: float,
        n: int,
        origin=(0.0, 0.0, 0.0),
        entries: Optional[Mapping[Index, Tuple[SigmaVoxfield, int]]] = None,
    ):
        if voxel_size <= 0:
            raise ValueError('voxel_size must be > 0, got {}'.format(voxel_size))
        if n < 0:
            raise ValueError('n must be >= 0, got {}'.format(n))
        self._voxel_size = as_file_float(voxel_size)
        self._n = int(n)
        self._origin = tuple(as_file_float(o) for o in origin)
        if len(self._origin) != 3:
            raise ValueError('origin needs 3 components')
        self._entries: Dict[Index, Tuple[SigmaVoxfield, int]] = {}
        for index, (voxfield, label) in (entries or {}).items():
            key = tuple(int(i) for i in index)
            self._check_entry(key, voxfield, label)
            self._entries[key] = (voxfield, int(label))

    def _check_entry(self, index, voxfield, label):
        if len(index) != 3:
            raise ValueError('voxel index {} is not 3D'.format(index))
        if voxfield.n != self._n:
            raise ValueError(
                'voxel {} holds {} samples, grid n is {}'.format(
                    index, voxfield.n, self._n
                )
            )
        if not is_valid_label(label):
            raise ValueError('voxel {} has invalid label {}'.format(index, label))

    @property
    def voxel_size(self) -> float:
        """Return the voxel edge length in meters."""
        return self._voxel_size

    @property
    def n(self) -> int:
        """Return the samples per voxel."""
        return self._n

    @property
    def origin(self) -> np.ndarray:
        """Return the world position of the (0, 0, 0) voxel corner."""
        return np.array(self._origin, dtype=np.float64)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, index):
        return tuple(index) in self._entries

    def __getitem__(self, index) -> Tuple[SigmaVoxfield, int]:
        return self._entries[tuple(index)]

    def __iter__(self):
        return iter(self.indices())

    def items(self) -> List[Tuple[Index, Tuple[SigmaVoxfield, int]]]:
        """Return entries sorted lexicographically by index."""
        return [(index, self._entries[index]) for index in self.indices()]

    def indices(self) -> List[Index]:
        """Return voxel indices in lexicographic order."""
        return sorted(self._entries)

    def index_array(self) -> np.ndarray:
        """Return (V, 3) int64 indices in lexicographic order."""
        return np.array(self.indices(), dtype=np.int64).reshape(-1, 3)

    def labels(self) -> np.ndarray:
        """Return labels aligned with `indices()`."""
        return np.array(
            [self._entries[index][1] for index in self.indices()], dtype=np.int64
        )

    def label_of(self, index) -> int:
        """Return the label of one voxel."""
        return self._entries[tuple(index)][1]

    def center_of(self, index) -> np.ndarray:
        """Return the world center of a voxel index."""
        return self.centers_of(np.asarray(index, dtype=np.int64).reshape(1, 3))[0]

    def centers_of(self, indices: np.ndarray) -> np.ndarray:
        """Return world centers of a (V, 3) index array."""
        indices = np.asarray(indices, dtype=np.float64).reshape(-1, 3)
        return self.origin + (indices + 0.5) * self._voxel_size

    def centers(self) -> np.ndarray:
        """Return (V, 3) world centers aligned with `indices()`."""
        return self.centers_of(self.index_array())

    def world_points(self) -> Tuple[np.ndarray, np.ndarray]:
        """Return world sample positions and colors, each (V * n, 3)."""
        if not self._entries or self._n == 0:
            empty = np.zeros((0, 3), dtype=np.float64)
            return empty, empty.copy()
        indices = self.indices()
        centers = self.centers_of(np.array(indices))
        relative = np.stack([self._entries[i][0].positions for i in indices])
        colors = np.stack([self._entries[i][0].colors for i in indices])
        points = centers[:, None, :] + relative.astype(np.float64)
        return points.reshape(-1, 3), colors.reshape(-1, 3).astype(np.float64)

    def index_of_point(self, point) -> Index:
        """Return the voxel index holding a world point (half-open boxes)."""
        offset = np.asarray(point, dtype=np.float64) - self.origin
        cell = np.floor(offset / self._voxel_size)
        return tuple(int(c) for c in cell)

    def with_entries(
        self,
        updates: Mapping[Index, Tuple[SigmaVoxfield, int]],
        n: Optional[int] = None,
    ) -> 'VoxfieldGrid':
        """Return a new grid with `updates` added or replaced."""
        entries = dict(self._entries) if n is None or n == self._n else {}
        entries.update(updates)
        return VoxfieldGrid(
            self._voxel_size, self._n if n is None else n, self._origin, entries
        )

    def without_samples(self) -> 'VoxfieldGrid':
        """Return the semantic skeleton (n = 0) of this grid."""
        empty = SigmaVoxfield(np.zeros((0, 3)), np.zeros((0, 3)), ordered=True)
        return VoxfieldGrid(
            self._voxel_size,
            0,
            self._origin,
            {index: (empty, label) for index, (_, label) in self._entries.items()},
        )

    @classmethod
    def skeleton(
        cls,
        voxel_size: float,
        labels: Mapping[Index, int],
        origin=(0.0, 0.0, 0.0),
    ) -> 'VoxfieldGrid':
        """Build a skeleton grid from an index -> label mapping."""
        empty = SigmaVoxfield(np.zeros((0, 3)), np.zeros((0, 3)), ordered=True)
        return cls(
            voxel_size,
            0,
            origin,
            {index: (empty, label) for index, label in labels.items()},
        )

    def __eq__(self, other):
        if not isinstance(other, VoxfieldGrid):
            return NotImplemented
        return (
            self._voxel_size == other._voxel_size
            and self._n == other._n
            and self._origin == other._origin
            and self._entries == other._entries
        )

    def __repr__(self):
        return 'VoxfieldGrid(voxel_size={}, n={}, voxels={})'.format(
            self._voxel_size, self._n, len(self._entries)
        )


def skeleton_of(grid: VoxfieldGrid) -> VoxfieldGrid:
    """Strip samples from a grid, keeping indices and labels."""
    return grid.without_samples()

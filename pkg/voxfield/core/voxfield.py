"""The Sigma-Voxfield: one voxel's n colored surface samples."""
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

# Samples are stored at file precision so VXF round trips are bit-exact.
SAMPLE_DTYPE = np.float32


class SurfaceSample(NamedTuple):
    """A colored surface point, position relative to the voxel center."""

    position: Tuple[float, float, float]
    color: Tuple[float, float, float]


def canonical_permutation(positions: np.ndarray, colors: np.ndarray) -> np.ndarray:
    """Return the permutation sorting samples into canonical order.

    Primary key is the distance to the voxel center; ties fall back to
    lexicographic (x, y, z) and then (r, g, b). Keys are taken at storage
    precision, so the order never depends on digits a stored voxfield drops.
    """
    positions = np.asarray(positions, dtype=SAMPLE_DTYPE).reshape(-1, 3)
    colors = np.asarray(colors, dtype=SAMPLE_DTYPE).reshape(-1, 3)
    if len(positions) == 0:
        return np.zeros(0, dtype=np.int64)
    wide = positions.astype(np.float64)
    squared = np.einsum('ij,ij->i', wide, wide)
    # np.lexsort sorts by the last key first.
    keys = (
        colors[:, 2],
        colors[:, 1],
        colors[:, 0],
        positions[:, 2],
        positions[:, 1],
        positions[:, 0],
        squared,
    )
    return np.lexsort(keys)


def canonical_order(samples: Sequence[SurfaceSample]) -> List[SurfaceSample]:
    """Sort samples by increasing distance to the voxel center."""
    if len(samples) == 0:
        return []
    positions = np.array([s.position for s in samples], dtype=np.float64)
    colors = np.array([s.color for s in samples], dtype=np.float64)
    return [samples[i] for i in canonical_permutation(positions, colors)]


def _frozen(array, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True).reshape(-1, 3)
    out.flags.writeable = False
    return out


class SigmaVoxfield:
    """
    Fixed-cardinality set of colored surface samples of one voxel.

    Positions are in meters relative to the voxel center, colors in [0, 1].
    Instances are immutable and always canonically ordered.

    :param positions: (n, 3) voxel-relative positions.
    :param colors: (n, 3) RGB colors.
    :param ordered: Skip the sort when the caller guarantees canonical order.
    """

    __slots__ = ('positions', 'colors')

    def __init__(self, positions, colors, ordered=False):
        positions = _frozen(positions, SAMPLE_DTYPE)
        colors = _frozen(colors, SAMPLE_DTYPE)
        if positions.shape != colors.shape:
            raise ValueError(
                'positions {} and colors {} differ in shape'.format(
                    positions.shape, colors.shape
                )
            )
        if not ordered:
            order = canonical_permutation(positions, colors)
            positions = _frozen(positions[order], SAMPLE_DTYPE)
            colors = _frozen(colors[order], SAMPLE_DTYPE)
        object.__setattr__(self, 'positions', positions)
        object.__setattr__(self, 'colors', colors)

    def __setattr__(self, key, value):
        raise AttributeError('SigmaVoxfield is immutable')

    @property
    def n(self) -> int:
        """Return the number of samples."""
        return len(self.positions)

    @property
    def samples(self) -> List[SurfaceSample]:
        """Return the samples as a list of SurfaceSample."""
        return [
            SurfaceSample(tuple(map(float, p)), tuple(map(float, c)))
            for p, c in zip(self.positions, self.colors)
        ]

    def is_canonical(self) -> bool:
        """Return True when the stored order is canonical."""
        order = canonical_permutation(self.positions, self.colors)
        return bool(np.array_equal(order, np.arange(self.n)))

    def in_bounds(self, voxel_size: float) -> bool:
        """Check the position and color range invariants."""
        half = SAMPLE_DTYPE(voxel_size) / 2
        return bool(
            np.all(np.abs(self.positions) <= half)
            and np.all(self.colors >= 0.0)
            and np.all(self.colors <= 1.0)
        )

    def __eq__(self, other):
        if not isinstance(other, SigmaVoxfield):
            return NotImplemented
        return np.array_equal(self.positions, other.positions) and np.array_equal(
            self.colors, other.colors
        )

    def __hash__(self):
        return hash((self.positions.tobytes(), self.colors.tobytes()))

    def __repr__(self):
        return 'SigmaVoxfield(n={})'.format(self.n)

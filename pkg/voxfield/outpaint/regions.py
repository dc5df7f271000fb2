"""
Distance-guided region extraction.

Starting from an initial region, the uncovered voxel nearest to the covered
set seeds the next candidate region: its K nearest voxels. A candidate is
accepted while it covers at least `T_cov` uncovered voxels; the first
rejection ends the plan. With `complete=True` the plan then continues with the
gate relaxed to one voxel. A rejected candidate holds more than `K - T_cov`
covered voxels, so the relaxed regions always extend the covered set through
an overlap and the plan ends with every voxel covered.

Distances are computed on integer voxel indices, so squared distances are
exact and kNN ties are broken by index order without rounding concerns.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from voxfield.utils.paths import make_sure_parent_exists

logger = logging.getLogger(__name__)

# Uncovered x new-member block size for the incremental distance update.
_UPDATE_BLOCK = 256


class RegionPlan:
    """
    Ordered regions of voxel indices.

    :param regions: (m, 3) int arrays, m <= K.
    :param K: Region size.
    :param T_cov: Coverage threshold.
    :param uncovered: Voxels left uncovered at termination.
    :param new_counts: Uncovered voxels each region covered when accepted.
    :param seeds: Seed voxel of each region after the first.
    :param relaxed: Regions accepted below `T_cov`.
    """

    def __init__(
        self,
        regions: Sequence[np.ndarray],
        K: int,
        T_cov: int,
        uncovered: int = 0,
        new_counts: Optional[List[int]] = None,
        seeds: Optional[List[tuple]] = None,
        relaxed: int = 0,
    ):
        self.regions = [np.asarray(r, dtype=np.int64).reshape(-1, 3) for r in regions]
        self.K = K
        self.T_cov = T_cov
        self.uncovered = uncovered
        self.new_counts = list(new_counts or [len(r) for r in self.regions[:1]])
        self.seeds = list(seeds or [])
        self.relaxed = relaxed

    def __len__(self):
        return len(self.regions)

    def covered(self) -> set:
        """Return every voxel index in some region."""
        return {tuple(int(v) for v in row) for region in self.regions for row in region}

    def __repr__(self):
        return 'RegionPlan(regions={}, K={}, T_cov={}, uncovered={})'.format(
            len(self.regions), self.K, self.T_cov, self.uncovered
        )


def dist_to_regions(p, regions: Sequence[np.ndarray]) -> float:
    """
    Minimum distance from a point to any member of any region.

    :param p: Point in meters.
    :param regions: Member positions, (m, 3) each, in meters.
    :raises ValueError: No region holds a member.
    """
    members = [np.asarray(r, dtype=np.float64).reshape(-1, 3) for r in regions]
    members = [m for m in members if len(m)]
    if not members:
        raise ValueError('dist_to_regions needs at least one non-empty region')
    stacked = np.concatenate(members)
    offsets = stacked - np.asarray(p, dtype=np.float64)
    return float(np.min(np.linalg.norm(offsets, axis=1)))


def _sorted_unique(indices) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64).reshape(-1, 3)
    return np.unique(indices, axis=0)


def _squared(indices: np.ndarray, point: np.ndarray) -> np.ndarray:
    diff = indices - point
    return np.einsum('ij,ij->i', diff, diff)


def k_nearest(indices: np.ndarray, tree: cKDTree, row: int, K: int) -> np.ndarray:
    """
    Rows of the K voxels nearest to `indices[row]`.

    `indices` must be sorted lexicographically; ties in distance go to the
    lexicographically smaller index.
    """
    K = min(K, len(indices))
    center = indices[row].astype(np.float64)
    distance, _ = tree.query(center, k=K)
    radius = float(np.max(distance))
    rows = np.asarray(tree.query_ball_point(center, radius + 1e-6), dtype=np.int64)
    squared = _squared(indices[rows], indices[row])
    # Rows are lexicographic, so sorting (squared, row) breaks ties by index.
    order = np.lexsort((rows, squared))
    return rows[order[:K]]


def bootstrap_region(indices, K: int, seed_index=None) -> np.ndarray:
    """
    Initial region: the K nearest voxels of the voxel closest to the centroid,
    or of `seed_index` when given.

    :return: (m, 3) voxel indices.
    :raises ValueError: `seed_index` is not one of `indices`.
    """
    indices = _sorted_unique(indices)
    if len(indices) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    tree = cKDTree(indices.astype(np.float64))
    if seed_index is None:
        centroid = indices.mean(axis=0)
        diff = indices - centroid
        row = int(np.argmin(np.einsum('ij,ij->i', diff, diff)))
    else:
        matches = np.flatnonzero(np.all(indices == np.asarray(seed_index), axis=1))
        if len(matches) == 0:
            raise ValueError(
                'seed index {} is not an occupied voxel'.format(seed_index)
            )
        row = int(matches[0])
    return indices[np.sort(k_nearest(indices, tree, row, K))]


def extract_regions(
    indices, K: int, T_cov: int, initial=None, complete: bool = False
) -> RegionPlan:
    """
    Plan overlapping regions covering the voxels `indices`.

    :param indices: (V, 3) voxel indices.
    :param K: Region size.
    :param T_cov: Minimum uncovered voxels a region must cover.
    :param initial: (m, 3) first region; built by `bootstrap_region` if None.
    :param complete: Accept candidates below `T_cov` instead of stopping.
    """
    if not K >= T_cov >= 1:
        raise ValueError('need K >= T_cov >= 1, got K={} T_cov={}'.format(K, T_cov))
    indices = _sorted_unique(indices)
    if len(indices) == 0:
        return RegionPlan([], K, T_cov)
    if initial is None:
        initial = bootstrap_region(indices, K)
    initial = _sorted_unique(initial)
    if len(initial) == 0:
        raise ValueError('initial region is empty')

    lookup = {tuple(row): number for number, row in enumerate(indices.tolist())}
    try:
        first = np.array(
            [lookup[tuple(row)] for row in initial.tolist()], dtype=np.int64
        )
    except KeyError as e:
        raise ValueError('initial region holds unknown voxel {}'.format(e.args[0]))

    tree = cKDTree(indices.astype(np.float64))
    covered = np.zeros(len(indices), dtype=bool)
    best = np.full(len(indices), np.iinfo(np.int64).max, dtype=np.int64)
    regions = [indices[first]]
    new_counts = [len(first)]
    seeds = []
    relaxed = 0

    def absorb(rows):
        fresh = rows[~covered[rows]]
        covered[fresh] = True
        best[fresh] = 0
        open_rows = np.flatnonzero(~covered)
        if len(open_rows) == 0:
            return len(fresh)
        points = indices[open_rows].astype(np.float64)
        point_sq = np.einsum('ij,ij->i', points, points)
        for start in range(0, len(fresh), _UPDATE_BLOCK):
            block = indices[fresh[start:start + _UPDATE_BLOCK]].astype(np.float64)
            # Integer-valued and far below 2**53, so exact in float64.
            squared = (
                point_sq[:, None]
                + np.einsum('ij,ij->i', block, block)[None, :]
                - 2.0 * points @ block.T
            )
            nearest = np.rint(squared.min(axis=1)).astype(np.int64)
            best[open_rows] = np.minimum(best[open_rows], nearest)
        return len(fresh)

    absorb(first)
    while not covered.all():
        open_rows = np.flatnonzero(~covered)
        # argmin returns the first minimum, i.e. the lexicographically smallest.
        seed = int(open_rows[np.argmin(best[open_rows])])
        candidate = k_nearest(indices, tree, seed, K)
        gain = int(np.count_nonzero(~covered[candidate]))
        if gain < T_cov:
            logger.debug(
                'Candidate around %s covers %d < %d uncovered voxels',
                tuple(indices[seed]),
                gain,
                T_cov,
            )
            if not complete:
                break
            # |candidate| >= T_cov > gain, so it overlaps the covered set.
            relaxed += 1
        absorb(candidate)
        regions.append(indices[np.sort(candidate)])
        new_counts.append(gain)
        seeds.append(tuple(int(v) for v in indices[seed]))

    uncovered = int(np.count_nonzero(~covered))
    if uncovered:
        logger.warning('%d voxels left uncovered by the region plan', uncovered)
    plan = RegionPlan(regions, K, T_cov, uncovered, new_counts, seeds, relaxed)
    if relaxed:
        logger.debug('%d regions accepted with the relaxed gate', relaxed)
    logger.debug('Extracted %r', plan)
    return plan


def format_plan(plan: RegionPlan) -> str:
    """Render `region_id: i,j,k; i,j,k; ...` lines."""
    lines = []
    for number, region in enumerate(plan.regions):
        members = '; '.join('{},{},{}'.format(*row) for row in region.tolist())
        lines.append('{}: {}'.format(number, members))
    return '\n'.join(lines) + ('\n' if lines else '')


def write_plan(plan: RegionPlan, path) -> None:
    """Export a plan for debugging and coverage figures."""
    make_sure_parent_exists(path)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(format_plan(plan))

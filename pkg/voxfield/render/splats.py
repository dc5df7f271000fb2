"""Surface-aligned 2D Gaussian splats from grid samples."""
import logging
from typing import NamedTuple, Tuple

import numpy as np
from scipy.spatial import cKDTree

from voxfield.core.grid import VoxfieldGrid

logger = logging.getLogger(__name__)

UP = np.array([0.0, 0.0, 1.0])
# Second eigenvalue below this fraction of the largest means rank < 2.
RANK_EPS = 1e-10


class Splat(NamedTuple):
    """A flat disk: rotation columns are (tangent u, tangent v, normal)."""

    center: np.ndarray
    rotation: np.ndarray
    radius: float
    color: np.ndarray


def _normal_from_covariance(cov: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Smallest-eigenvalue eigenvectors of (..., 3, 3) covariances, plus rank flags."""
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    normals = eigenvectors[..., :, 0]
    scale = np.maximum(eigenvalues[..., 2], 1e-300)
    degenerate = eigenvalues[..., 1] <= RANK_EPS * scale
    # Deterministic sign: first non-zero component positive, z checked first.
    nz = np.abs(normals) > 1e-12
    flip = np.where(
        nz[..., 2],
        normals[..., 2] < 0,
        np.where(nz[..., 1], normals[..., 1] < 0, normals[..., 0] < 0),
    )
    normals = np.where(flip[..., None], -normals, normals)
    normals = np.where(degenerate[..., None], UP, normals)
    return normals, degenerate


def estimate_normal(point, neighbors) -> Tuple[np.ndarray, bool]:
    """
    PCA normal of a neighborhood.

    :param point: The query point (part of the neighborhood or not).
    :param neighbors: (k, 3) points, k >= 3.
    :return: (unit normal, degenerate). Degenerate neighborhoods (fewer than
        3 points, collinear or coincident) yield +z.
    """
    neighbors = np.asarray(neighbors, dtype=np.float64).reshape(-1, 3)
    if len(neighbors) < 3:
        return UP.copy(), True
    centered = neighbors - neighbors.mean(axis=0)
    cov = centered.T @ centered / len(neighbors)
    normal, degenerate = _normal_from_covariance(cov)
    return normal, bool(degenerate)


def estimate_normals(points: np.ndarray, k: int = 16, radius: float = 1.2):
    """
    Normals for every point from its k nearest neighbours within `radius`.

    :return: ((N, 3) normals, (N,) degenerate flags)
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        return np.zeros((0, 3)), np.zeros(0, dtype=bool)
    k = min(k, len(points))
    distance, rows = cKDTree(points).query(points, k=k, distance_upper_bound=radius)
    distance = distance.reshape(len(points), k)
    rows = rows.reshape(len(points), k)
    valid = np.isfinite(distance)
    counts = valid.sum(axis=1)
    neighbors = points[np.where(valid, rows, 0)]
    weights = valid[..., None].astype(np.float64)
    mean = (neighbors * weights).sum(axis=1) / counts[:, None]
    centered = (neighbors - mean[:, None, :]) * weights
    cov = np.einsum('nki,nkj->nij', centered, centered) / counts[:, None, None]
    normals, degenerate = _normal_from_covariance(cov)
    few = counts < 3
    normals[few] = UP
    return normals, degenerate | few


def tangent_frame(normals: np.ndarray) -> np.ndarray:
    """
    Rotations whose third column is the normal.

    The first tangent is the x axis (the y axis when the normal is close to
    x) projected onto the tangent plane; the second completes a right-handed
    frame.
    """
    normals = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
    helper = np.where(
        (np.abs(normals[:, 0]) < 0.9)[:, None], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]
    )
    u = helper - np.einsum('ij,ij->i', helper, normals)[:, None] * normals
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = np.cross(normals, u)
    return np.stack([u, v, normals], axis=2)


class SplatCloud:
    """
    Splats as parallel arrays.

    :param centers: (S, 3) world positions.
    :param rotations: (S, 3, 3) rotations, third column the normal.
    :param radius: Common radius in meters.
    :param colors: (S, 3) colors in [0, 1].
    """

    def __init__(self, centers, rotations, radius: float, colors, degenerate=None):
        self.centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
        self.rotations = np.asarray(rotations, dtype=np.float64).reshape(-1, 3, 3)
        self.radius = float(radius)
        self.colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
        if degenerate is None:
            degenerate = np.zeros(len(self.centers), dtype=bool)
        self.degenerate = np.asarray(degenerate, dtype=bool)

    @property
    def normals(self) -> np.ndarray:
        return self.rotations[:, :, 2]

    def __len__(self):
        return len(self.centers)

    def __getitem__(self, item) -> Splat:
        return Splat(
            self.centers[item], self.rotations[item], self.radius, self.colors[item]
        )

    def to_list(self):
        return [self[i] for i in range(len(self))]

    def subset(self, rows) -> 'SplatCloud':
        return SplatCloud(
            self.centers[rows],
            self.rotations[rows],
            self.radius,
            self.colors[rows],
            self.degenerate[rows],
        )

    def __repr__(self):
        return 'SplatCloud(splats={}, radius={})'.format(len(self), self.radius)


def build_splats(
    g: VoxfieldGrid, r: float = 0.04, k: int = 16, radius: float = 1.2
) -> SplatCloud:
    """One splat per grid sample, oriented by PCA over its neighbours."""
    points, colors = g.world_points()
    normals, degenerate = estimate_normals(points, k, radius)
    if degenerate.any():
        logger.warning(
            '%d of %d samples have degenerate neighbourhoods, using +z',
            int(degenerate.sum()),
            len(points),
        )
    return SplatCloud(points, tangent_frame(normals), r, colors, degenerate)

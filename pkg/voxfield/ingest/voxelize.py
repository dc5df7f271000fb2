"""Mesh to Sigma-Voxfield grid conversion.

Triangles are clipped against voxel boxes (Sutherland-Hodgman in barycentric
coordinates), then samples are drawn area-uniformly over the clipped surface.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Set

import numpy as np

from voxfield.core.grid import Index, VoxfieldGrid, as_file_float
from voxfield.core.voxfield import SAMPLE_DTYPE, SigmaVoxfield
from voxfield.exceptions import InternalInconsistencyError
from voxfield.ingest.mesh import Mesh
from voxfield.utils.rng import derive_rng

logger = logging.getLogger(__name__)

# Clipped pieces below this fraction of a voxel face count as empty.
AREA_EPS = 1e-12


class Piece(NamedTuple):
    """Part of one triangle inside one voxel."""

    face: int
    bary: np.ndarray  # (m, 3) barycentric polygon corners
    area: float


def polygon_area(points: np.ndarray) -> float:
    """Return the area of a planar 3D polygon."""
    if len(points) < 3:
        return 0.0
    rel = points[1:] - points[0]
    return 0.5 * float(np.linalg.norm(np.cross(rel[:-1], rel[1:]).sum(axis=0)))


def _clip(bary, corners, axis, bound, keep_above):
    """Clip a polygon against one axis-aligned plane."""
    values = (bary @ corners)[:, axis] - bound
    if not keep_above:
        values = -values
    out = []
    count = len(bary)
    for a in range(count):
        b = (a + 1) % count
        va, vb = values[a], values[b]
        if va >= 0:
            out.append(bary[a])
        if (va >= 0) != (vb >= 0):
            w = va / (va - vb)
            out.append(bary[a] + w * (bary[b] - bary[a]))
    return np.array(out).reshape(-1, 3)


def clip_triangle(corners: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """
    Clip a triangle to the box `[lo, hi]`.

    :param corners: (3, 3) triangle corners.
    :return: (m, 3) barycentric corners of the clipped polygon, m == 0 when empty.
    """
    bary = np.eye(3)
    for axis in range(3):
        bary = _clip(bary, corners, axis, lo[axis], True)
        if len(bary) < 3:
            return np.zeros((0, 3))
        bary = _clip(bary, corners, axis, hi[axis], False)
        if len(bary) < 3:
            return np.zeros((0, 3))
    return bary


class ClippedSurface:
    """
    A mesh cut into per-voxel pieces.

    :param mesh: Source mesh.
    :param voxel_size: Voxel edge in meters, rounded to file precision.
    :param origin: World position of the (0, 0, 0) voxel corner.
    """

    def __init__(self, mesh: Mesh, voxel_size: float, origin=(0.0, 0.0, 0.0)):
        self.mesh = mesh
        self.voxel_size = as_file_float(voxel_size)
        self.origin = np.array([as_file_float(o) for o in origin], dtype=np.float64)
        self.pieces: Dict[Index, List[Piece]] = {}
        self._corners = mesh.corners()
        for face in range(mesh.face_count):
            self._add_face(face)
        logger.debug(
            'Clipped %d faces into %d voxels at %.3f m',
            mesh.face_count,
            len(self.pieces),
            self.voxel_size,
        )

    def box(self, index) -> np.ndarray:
        """Return the (2, 3) min/max corners of a voxel."""
        lo = self.origin + np.asarray(index, dtype=np.float64) * self.voxel_size
        return np.stack([lo, lo + self.voxel_size])

    def _add_face(self, face):
        corners = self._corners[face]
        cells = (corners - self.origin) / self.voxel_size
        first = np.floor(cells.min(axis=0)).astype(np.int64)
        last = np.floor(cells.max(axis=0)).astype(np.int64)
        ranges = [range(first[a], last[a] + 1) for a in range(3)]
        threshold = AREA_EPS * self.voxel_size ** 2
        for index in itertools.product(*ranges):
            lo, hi = self.box(index)
            bary = clip_triangle(corners, lo, hi)
            if len(bary) < 3:
                continue
            area = polygon_area(bary @ corners)
            if area > threshold:
                self.pieces.setdefault(index, []).append(Piece(face, bary, area))

    def occupied(self) -> Set[Index]:
        """Return the occupied voxel indices."""
        return set(self.pieces)

    def sample(self, index, n: int, rng_seed: int):
        """Sample one voxel; see `sample_voxfield`."""
        index = tuple(int(i) for i in index)
        pieces = self.pieces.get(index, [])
        total = sum(p.area for p in pieces)
        if total <= 0:
            raise InternalInconsistencyError(
                'voxel {} has zero clipped area'.format(index)
            )
        label = self._majority_label(pieces)

        fan_faces, fan_bary, fan_area = [], [], []
        for piece in pieces:
            corners = self._corners[piece.face]
            for k in range(1, len(piece.bary) - 1):
                tri = piece.bary[[0, k, k + 1]]
                fan_faces.append(piece.face)
                fan_bary.append(tri)
                fan_area.append(polygon_area(tri @ corners))
        fan_area = np.asarray(fan_area)
        fan_bary = np.asarray(fan_bary)
        fan_faces = np.asarray(fan_faces)

        rng = derive_rng(rng_seed, *index)
        chosen = rng.choice(len(fan_area), size=n, p=fan_area / fan_area.sum())
        u = rng.random(n)
        v = rng.random(n)
        root = np.sqrt(u)
        weights = np.stack([1.0 - root, root * (1.0 - v), root * v], axis=1)
        # Barycentric coordinates of each sample w.r.t. its source triangle.
        bary = np.einsum('si,sij->sj', weights, fan_bary[chosen])
        faces = fan_faces[chosen]
        points = np.einsum('sj,sjk->sk', bary, self._corners[faces])
        colors = np.einsum('sj,sjk->sk', bary, self.mesh.corner_colors()[faces])

        lo, hi = self.box(index)
        center = (lo + hi) / 2.0
        half = float(SAMPLE_DTYPE(self.voxel_size)) / 2.0
        relative = np.clip(points - center, -half, half)
        voxfield = SigmaVoxfield(relative, np.clip(colors, 0.0, 1.0))
        return voxfield, label

    def _majority_label(self, pieces) -> int:
        areas: Dict[int, float] = {}
        for piece in pieces:
            label = int(self.mesh.semantics[piece.face])
            areas[label] = areas.get(label, 0.0) + piece.area
        best = max(areas.values())
        return min(label for label, area in areas.items() if area == best)


def voxelize(m: Mesh, voxel_size: float, origin=(0.0, 0.0, 0.0)) -> Set[Index]:
    """Return the voxels whose box meets the mesh with positive clipped area."""
    return ClippedSurface(m, voxel_size, origin).occupied()


def sample_voxfield(
    m: Mesh,
    voxel,
    n: int,
    rng_seed: int,
    voxel_size: float,
    origin=(0.0, 0.0, 0.0),
):
    """
    Draw `n` samples uniformly over the mesh surface inside one voxel.

    Colors are interpolated barycentrically; the label is the clipped-area
    majority of the contributing faces, ties going to the smaller class id.

    :return: (SigmaVoxfield, label)
    :raises InternalInconsistencyError: The voxel has no clipped area.
    """
    faces = _faces_near(m, voxel, voxel_size, origin)
    surface = ClippedSurface(faces, voxel_size, origin)
    return surface.sample(voxel, n, rng_seed)


def _faces_near(m: Mesh, voxel, voxel_size, origin) -> Mesh:
    """Restrict a mesh to faces whose bounding box touches one voxel."""
    voxel_size = as_file_float(voxel_size)
    lo = np.array([as_file_float(o) for o in origin]) + np.asarray(voxel) * voxel_size
    hi = lo + voxel_size
    corners = m.corners()
    keep = np.all(corners.min(axis=1) <= hi, axis=1) & np.all(
        corners.max(axis=1) >= lo, axis=1
    )
    return Mesh(m.vertices, m.colors, m.triangles[keep], m.semantics[keep])


def build_grid(
    m: Mesh,
    voxel_size: float,
    n: int,
    rng_seed: int,
    origin=(0.0, 0.0, 0.0),
    workers: int = 1,
    surface: Optional[ClippedSurface] = None,
) -> VoxfieldGrid:
    """
    Convert a mesh to a Sigma-Voxfield grid.

    Each voxel draws from a stream derived from `(rng_seed, i, j, k)`, so the
    result does not depend on `workers`.

    :param surface: Reuse a precomputed clipping of `m` (n sweeps).
    """
    if surface is None:
        surface = ClippedSurface(m, voxel_size, origin)
    indices = sorted(surface.occupied())

    def work(chunk):
        return [(index, surface.sample(index, n, rng_seed)) for index in chunk]

    if workers > 1 and len(indices) > 1:
        chunks = [indices[w::workers] for w in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = [item for part in pool.map(work, chunks) for item in part]
    else:
        results = work(indices)

    grid = VoxfieldGrid(surface.voxel_size, n, tuple(surface.origin), dict(results))
    logger.debug('Built %r', grid)
    return grid

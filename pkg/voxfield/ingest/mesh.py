"""Colored triangle meshes: OBJ with vertex colors plus a `.sem` sidecar."""
import logging
import os
from typing import Optional

import numpy as np

from voxfield.exceptions import MeshIndexError, MeshParseError, SidecarMismatchError
from voxfield.models import NULL_LABEL, NULL_LABEL_ON_DISK, is_valid_label
from voxfield.utils.paths import make_sure_parent_exists, sidecar_path

logger = logging.getLogger(__name__)

DEFAULT_COLOR = (0.5, 0.5, 0.5)
SIDECAR_SUFFIX = '.sem'


class Mesh:
    """
    Colored triangle mesh with one semantic label per face.

    :param vertices: (V, 3) positions in meters.
    :param colors: (V, 3) colors in [0, 1].
    :param triangles: (F, 3) vertex indices.
    :param semantics: (F,) class ids, NULL_LABEL for unlabeled faces.
    """

    def __init__(self, vertices, colors, triangles, semantics=None):
        self.vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        self.colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if semantics is None:
            semantics = np.full(len(self.triangles), NULL_LABEL)
        self.semantics = np.asarray(semantics, dtype=np.int64).reshape(-1)
        for array in (self.vertices, self.colors, self.triangles, self.semantics):
            array.flags.writeable = False
        self._validate()

    def _validate(self):
        if len(self.colors) != len(self.vertices):
            raise MeshIndexError(
                '{} colors for {} vertices'.format(len(self.colors), len(self.vertices))
            )
        if len(self.triangles) and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise MeshIndexError(
                'triangle index out of range [0, {})'.format(len(self.vertices))
            )
        if len(self.semantics) != len(self.triangles):
            raise SidecarMismatchError(
                '{} labels for {} faces'.format(
                    len(self.semantics), len(self.triangles)
                )
            )
        bad = [s for s in np.unique(self.semantics) if not is_valid_label(s)]
        if bad:
            raise SidecarMismatchError('labels outside the taxonomy: {}'.format(bad))

    @property
    def face_count(self) -> int:
        """Return the number of triangles."""
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """Return (F, 3, 3) triangle corner positions."""
        return self.vertices[self.triangles]

    def corner_colors(self) -> np.ndarray:
        """Return (F, 3, 3) triangle corner colors."""
        return self.colors[self.triangles]

    def areas(self) -> np.ndarray:
        """Return (F,) triangle areas."""
        c = self.corners()
        normals = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        return 0.5 * np.linalg.norm(normals, axis=1)

    def sample_surface(self, count: int, rng: np.random.Generator):
        """Draw `count` area-uniform surface points.

        :return: (points, face ids)
        """
        areas = self.areas()
        total = areas.sum()
        if count <= 0 or total <= 0:
            return np.zeros((0, 3)), np.zeros(0, dtype=np.int64)
        faces = rng.choice(len(areas), size=count, p=areas / total)
        u = rng.random(count)
        v = rng.random(count)
        root = np.sqrt(u)
        bary = np.stack([1.0 - root, root * (1.0 - v), root * v], axis=1)
        points = np.einsum('fi,fij->fj', bary, self.corners()[faces])
        return points, faces

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.colors, other.colors)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.semantics, other.semantics)
        )

    def __repr__(self):
        return 'Mesh(vertices={}, faces={})'.format(len(self.vertices), self.face_count)


def _parse_floats(parts, line_number, what):
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise MeshParseError(
            'malformed {}: {}'.format(what, ' '.join(parts)), line_number
        )


def _face_vertex(token, vertex_count, line_number):
    # Accept `i`, `i/t`, `i//n` and `i/t/n`; negative indices are relative.
    try:
        index = int(token.split('/')[0])
    except ValueError:
        raise MeshParseError('malformed face index {!r}'.format(token), line_number)
    if index < 0:
        index = vertex_count + index
    else:
        index -= 1
    if not 0 <= index < vertex_count:
        raise MeshIndexError(
            'line {}: face index {} out of range (1..{})'.format(
                line_number, token, vertex_count
            )
        )
    return index


def read_sidecar(path: str, face_count: int) -> np.ndarray:
    """Read whitespace separated class ids, 255 meaning NULL."""
    with open(path, encoding='utf-8') as f:
        tokens = f.read().split()
    try:
        labels = np.array([int(t) for t in tokens], dtype=np.int64)
    except ValueError as e:
        raise SidecarMismatchError('{}: {}'.format(path, e))
    if len(labels) != face_count:
        raise SidecarMismatchError(
            '{}: {} labels for {} faces'.format(path, len(labels), face_count)
        )
    labels[labels == NULL_LABEL_ON_DISK] = NULL_LABEL
    return labels


def load_mesh(path: str, sidecar: Optional[str] = None) -> Mesh:
    """
    Load an OBJ with optional vertex colors (``v x y z r g b``).

    Polygons are fan-triangulated. Missing colors default to mid-gray; without
    a sidecar (``<stem>.sem``) every face is NULL.

    :param path: OBJ file.
    :param sidecar: Explicit sidecar path; defaults to the OBJ path with `.sem`.
    """
    vertices, colors, triangles = [], [], []
    with open(path, encoding='utf-8') as f:
        for line_number, raw in enumerate(f, start=1):
            parts = raw.split('#', 1)[0].split()
            if not parts:
                continue
            tag, args = parts[0], parts[1:]
            if tag == 'v':
                if len(args) not in (3, 4, 6, 7):
                    raise MeshParseError(
                        'vertex needs 3 or 6 values, got {}'.format(len(args)),
                        line_number,
                    )
                values = _parse_floats(args, line_number, 'vertex')
                vertices.append(values[:3])
                colors.append(values[3:6] if len(values) >= 6 else DEFAULT_COLOR)
            elif tag == 'f':
                if len(args) < 3:
                    raise MeshParseError('face needs at least 3 vertices', line_number)
                face = [_face_vertex(a, len(vertices), line_number) for a in args]
                for k in range(1, len(face) - 1):
                    triangles.append((face[0], face[k], face[k + 1]))
            # Other statements (vt, vn, o, g, usemtl, s, ...) carry nothing we use.

    colors = np.clip(np.asarray(colors, dtype=np.float64).reshape(-1, 3), 0.0, 1.0)
    if sidecar is None:
        sidecar = sidecar_path(path, SIDECAR_SUFFIX)
    if os.path.isfile(sidecar):
        semantics = read_sidecar(sidecar, len(triangles))
    else:
        logger.debug('No sidecar at %s, all faces NULL', sidecar)
        semantics = None
    mesh = Mesh(vertices, colors, triangles, semantics)
    logger.debug('Loaded %r from %s', mesh, path)
    return mesh


def write_mesh(mesh: Mesh, path: str) -> str:
    """Write OBJ with vertex colors plus the `.sem` sidecar; return the sidecar path."""
    make_sure_parent_exists(path)
    lines = [
        'v {:.9g} {:.9g} {:.9g} {:.6g} {:.6g} {:.6g}'.format(*p, *c)
        for p, c in zip(mesh.vertices, mesh.colors)
    ]
    lines += ['f {} {} {}'.format(*(t + 1)) for t in mesh.triangles]
    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(lines) + '\n')

    sem = sidecar_path(path, SIDECAR_SUFFIX)
    labels = np.where(mesh.semantics == NULL_LABEL, NULL_LABEL_ON_DISK, mesh.semantics)
    with open(sem, 'w', encoding='utf-8') as f:
        f.write('\n'.join(str(int(s)) for s in labels) + '\n')
    return sem

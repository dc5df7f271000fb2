"""Camera files, look-at poses and drive-through trajectories."""
import logging
from typing import Dict, List, Sequence

import numpy as np
from pydantic import ValidationError

from voxfield.core.grid import VoxfieldGrid
from voxfield.exceptions import CameraFormatError, ConfigError, EmptyGeometryError
from voxfield.models import Camera
from voxfield.utils.paths import make_sure_parent_exists
from voxfield.utils.reader import parse_key_value_lines, read_key_value_blocks

logger = logging.getLogger(__name__)

CAMERA_KEYS = ('fx', 'fy', 'cx', 'cy', 'width', 'height', 'pose')


def camera_from_values(
    values: Dict[str, str], line_map: Dict[str, int], source=''
) -> Camera:
    """Build a Camera from one parsed key=value block."""
    unknown = [k for k in values if k not in CAMERA_KEYS]
    if unknown:
        raise CameraFormatError(
            '{}: unknown camera key {!r} (line {})'.format(
                source, unknown[0], line_map.get(unknown[0])
            )
        )
    try:
        return Camera(**values)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first['loc'][0]) if first.get('loc') else None
        raise CameraFormatError(
            '{}: camera key {!r} (line {}): {}'.format(
                source, key, line_map.get(key), first.get('msg')
            )
        )


def read_trajectory(path) -> List[Camera]:
    """Read one camera per blank-line separated block."""
    try:
        blocks = read_key_value_blocks(path)
    except ConfigError as e:
        raise CameraFormatError(str(e))
    if not blocks:
        raise CameraFormatError('{}: no camera blocks'.format(path))
    return [camera_from_values(values, lines, path) for values, lines in blocks]


def read_camera(path) -> Camera:
    """Read a single-camera file."""
    cameras = read_trajectory(path)
    if len(cameras) != 1:
        raise CameraFormatError(
            '{}: expected one camera, got {}'.format(path, len(cameras))
        )
    return cameras[0]


def format_camera(camera: Camera) -> str:
    return '\n'.join(
        [
            'fx = {!r}'.format(camera.fx),
            'fy = {!r}'.format(camera.fy),
            'cx = {!r}'.format(camera.cx),
            'cy = {!r}'.format(camera.cy),
            'width = {}'.format(camera.width),
            'height = {}'.format(camera.height),
            'pose = {}'.format(' '.join(repr(float(v)) for v in camera.pose)),
        ]
    )


def write_trajectory(cameras: Sequence[Camera], path) -> None:
    """Write cameras as blank-line separated key=value blocks."""
    make_sure_parent_exists(path)
    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n\n'.join(format_camera(c) for c in cameras) + '\n')


def parse_camera(text: str) -> Camera:
    """Parse a single camera block from a string."""
    try:
        values, lines = parse_key_value_lines(text.splitlines())
    except ConfigError as e:
        raise CameraFormatError(str(e))
    return camera_from_values(values, lines)


def look_at(
    eye,
    target,
    width: int,
    height: int,
    fx: float,
    fy: float = None,
    up=(0.0, 0.0, 1.0),
) -> Camera:
    """
    Camera at `eye` looking at `target`, principal point at the image center.

    Camera axes are x right, y down, z forward.
    """
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    if np.linalg.norm(forward) == 0:
        raise ValueError('eye and target coincide')
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(up, dtype=np.float64))
    if np.linalg.norm(right) < 1e-9:
        raise ValueError('view direction is parallel to up')
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    rotation = np.stack([right, down, forward])
    translation = -rotation @ eye
    pose = np.concatenate([rotation, translation[:, None]], axis=1).reshape(-1)
    return Camera(
        fx=fx,
        fy=fx if fy is None else fy,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
        width=width,
        height=height,
        pose=tuple(float(v) for v in pose),
    )


def drive_trajectory(
    grid: VoxfieldGrid,
    frames: int,
    width: int = 256,
    height: int = 128,
    fx: float = 180.0,
    camera_height: float = 1.6,
    look_ahead: float = 10.0,
) -> List[Camera]:
    """
    A forward drive along the long horizontal axis of the occupied voxels.

    The camera runs along the middle of the short axis at `camera_height`
    above the lowest voxel centers, from 10 % to 90 % of the long extent.
    """
    if len(grid) == 0:
        raise EmptyGeometryError('cannot plan a drive through an empty grid')
    if frames < 1:
        raise ValueError('frames must be >= 1')
    centers = grid.centers()
    lo, hi = centers.min(axis=0), centers.max(axis=0)
    long_axis = 0 if hi[0] - lo[0] >= hi[1] - lo[1] else 1
    short_axis = 1 - long_axis
    z = lo[2] + camera_height
    fractions = [0.5] if frames == 1 else np.linspace(0.1, 0.9, frames)
    cameras = []
    for fraction in fractions:
        eye = np.zeros(3)
        eye[long_axis] = lo[long_axis] + fraction * (hi[long_axis] - lo[long_axis])
        eye[short_axis] = (lo[short_axis] + hi[short_axis]) / 2.0
        eye[2] = z
        target = eye.copy()
        target[long_axis] += look_ahead
        target[2] = z - 0.2 * camera_height
        cameras.append(look_at(eye, target, width, height, fx))
    logger.debug('Planned %d frames along axis %d', len(cameras), long_axis)
    return cameras

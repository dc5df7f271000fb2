"""
Software surfel rasterizer.

Splats are culled at the near plane, sorted back to front by the depth of
their centers and alpha-composited over a background. Each pixel casts a ray
through its center (integer pixel coordinates), intersects the splat's
tangent plane and evaluates a Gaussian of the in-plane distance.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Tuple

import numpy as np

from voxfield.exceptions import EmptyGeometryError
from voxfield.models import Camera
from voxfield.render.splats import SplatCloud

logger = logging.getLogger(__name__)

NEAR = 1e-3
ALPHA_MIN = 1.0 / 255.0
# Support radius in units of sigma.
CUTOFF_SIGMAS = 3.0
TILE = 32


class RenderOutput(NamedTuple):
    rgb: np.ndarray
    coverage: np.ndarray

    @property
    def sky(self) -> np.ndarray:
        """Pixels that received no splat contribution."""
        return ~self.coverage


class _CameraFrame(NamedTuple):
    """Visible splats in camera coordinates, in compositing order."""

    centers: np.ndarray
    normals: np.ndarray
    tangent_u: np.ndarray
    tangent_v: np.ndarray
    colors: np.ndarray
    sigma: float


def _camera_frame(splats: SplatCloud, camera: Camera) -> _CameraFrame:
    rotation, translation = camera.rotation, camera.translation
    centers = splats.centers @ rotation.T + translation
    axes = np.einsum('ij,sjk->sik', rotation, splats.rotations)
    visible = centers[:, 2] > NEAR
    centers, axes, colors = centers[visible], axes[visible], splats.colors[visible]
    normals = axes[:, :, 2]
    # Normals face the camera.
    facing = np.einsum('ij,ij->i', normals, centers) > 0
    normals = np.where(facing[:, None], -normals, normals)
    # Back to front; ties broken by splat content so input order is irrelevant.
    keys = np.concatenate([colors, axes.reshape(-1, 9), centers], axis=1)
    order = np.lexsort(tuple(keys.T[::-1]) + (-centers[:, 2],))
    return _CameraFrame(
        centers[order],
        normals[order],
        axes[order, :, 0],
        axes[order, :, 1],
        colors[order],
        splats.radius / 2.0,
    )


def _ray_grid(camera: Camera, rows: slice, cols: slice):
    ys = (np.arange(rows.start, rows.stop, dtype=np.float64) - camera.cy) / camera.fy
    xs = (np.arange(cols.start, cols.stop, dtype=np.float64) - camera.cx) / camera.fx
    return np.meshgrid(xs, ys)


def splat_alpha(frame: _CameraFrame, s: int, xs: np.ndarray, ys: np.ndarray):
    """
    Alpha of splat `s` along the rays (xs, ys, 1).

    Pixels whose ray misses the disk support or whose alpha is at most
    ALPHA_MIN get zero.
    """
    c0, c1, c2 = frame.centers[s]
    n0, n1, n2 = frame.normals[s]
    u0, u1, u2 = frame.tangent_u[s]
    v0, v1, v2 = frame.tangent_v[s]
    denom = n0 * xs + n1 * ys + n2
    num = n0 * c0 + n1 * c1 + n2 * c2
    with np.errstate(divide='ignore', invalid='ignore'):
        depth = num / denom
    px = depth * xs - c0
    py = depth * ys - c1
    pz = depth - c2
    a = px * u0 + py * u1 + pz * u2
    b = px * v0 + py * v1 + pz * v2
    d2 = a * a + b * b
    sigma2 = frame.sigma * frame.sigma
    hit = (np.abs(denom) > 1e-12) & (depth > NEAR)
    hit &= d2 <= CUTOFF_SIGMAS * CUTOFF_SIGMAS * sigma2
    with np.errstate(invalid='ignore', over='ignore'):
        alpha = np.exp(-d2 / (2.0 * sigma2))
    return np.where(hit & (alpha > ALPHA_MIN), alpha, 0.0)


def _bounding_boxes(frame: _CameraFrame, camera: Camera) -> np.ndarray:
    """
    Pixel boxes (row0, row1, col0, col1), half-open, covering each splat.

    The box bounds the projection of the square circumscribing the support
    disk; when a corner lies behind the near plane it is the whole image.
    """
    half = CUTOFF_SIGMAS * frame.sigma
    corners = []
    for su in (-half, half):
        for sv in (-half, half):
            corners.append(frame.centers + su * frame.tangent_u + sv * frame.tangent_v)
    corners = np.stack(corners, axis=1)
    z = corners[:, :, 2]
    ahead = (z > NEAR).all(axis=1)
    with np.errstate(divide='ignore', invalid='ignore'):
        px = camera.fx * corners[:, :, 0] / z + camera.cx
        py = camera.fy * corners[:, :, 1] / z + camera.cy
    boxes = np.empty((len(corners), 4), dtype=np.int64)
    boxes[:] = (0, camera.height, 0, camera.width)
    if ahead.any():
        lo_y = np.floor(py[ahead].min(axis=1)) - 1
        hi_y = np.ceil(py[ahead].max(axis=1)) + 2
        lo_x = np.floor(px[ahead].min(axis=1)) - 1
        hi_x = np.ceil(px[ahead].max(axis=1)) + 2
        boxes[ahead, 0] = np.clip(lo_y, 0, camera.height)
        boxes[ahead, 1] = np.clip(hi_y, 0, camera.height)
        boxes[ahead, 2] = np.clip(lo_x, 0, camera.width)
        boxes[ahead, 3] = np.clip(hi_x, 0, camera.width)
    return boxes


def _composite_tile(frame, boxes, camera, rows: slice, cols: slice, rgb, coverage):
    touching = np.nonzero(
        (boxes[:, 0] < rows.stop)
        & (boxes[:, 1] > rows.start)
        & (boxes[:, 2] < cols.stop)
        & (boxes[:, 3] > cols.start)
    )[0]
    for s in touching:
        r = slice(max(boxes[s, 0], rows.start), min(boxes[s, 1], rows.stop))
        c = slice(max(boxes[s, 2], cols.start), min(boxes[s, 3], cols.stop))
        if r.start >= r.stop or c.start >= c.stop:
            continue
        xs, ys = _ray_grid(camera, r, c)
        alpha = splat_alpha(frame, s, xs, ys)
        hit = alpha > 0
        if not hit.any():
            continue
        block = rgb[r, c]
        blended = alpha[..., None] * frame.colors[s] + (1.0 - alpha[..., None]) * block
        rgb[r, c] = np.where(hit[..., None], blended, block)
        coverage[r, c] |= hit


def _check_image(camera: Camera):
    if camera.width == 0 or camera.height == 0:
        raise EmptyGeometryError(
            'cannot render a {}x{} image'.format(camera.width, camera.height)
        )


def _tiles(camera: Camera, tile: int) -> List[Tuple[slice, slice]]:
    return [
        (slice(y, min(y + tile, camera.height)), slice(x, min(x + tile, camera.width)))
        for y in range(0, camera.height, tile)
        for x in range(0, camera.width, tile)
    ]


def render(
    splats: SplatCloud,
    camera: Camera,
    background=(0.0, 0.0, 0.0),
    workers: int = 1,
    tile: int = TILE,
) -> RenderOutput:
    """
    Rasterize splats into an RGB image and a coverage mask.

    Tiles are independent and composite in the global sorted order, so the
    output does not depend on `workers`.

    :param splats: The splat cloud.
    :param camera: Pinhole camera.
    :param background: RGB in [0, 1] for pixels without contribution.
    :param workers: Threads rasterizing tiles.
    :return: RenderOutput with float64 rgb (H, W, 3) and bool coverage (H, W).
    """
    _check_image(camera)
    rgb = np.empty((camera.height, camera.width, 3), dtype=np.float64)
    rgb[:] = np.asarray(background, dtype=np.float64)
    coverage = np.zeros((camera.height, camera.width), dtype=bool)
    frame = _camera_frame(splats, camera)
    if len(frame.centers) == 0:
        return RenderOutput(rgb, coverage)
    boxes = _bounding_boxes(frame, camera)
    tiles = _tiles(camera, tile)
    logger.debug(
        'Rendering %d of %d splats over %d tiles',
        len(frame.centers),
        len(splats),
        len(tiles),
    )

    def run(bounds):
        _composite_tile(frame, boxes, camera, bounds[0], bounds[1], rgb, coverage)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, tiles))
    else:
        for bounds in tiles:
            run(bounds)
    return RenderOutput(rgb, coverage)


def render_reference(
    splats: SplatCloud, camera: Camera, background=(0.0, 0.0, 0.0)
) -> RenderOutput:
    """Full-image compositor without boxes or tiles, for cross-checking `render`."""
    _check_image(camera)
    rgb = np.empty((camera.height, camera.width, 3), dtype=np.float64)
    rgb[:] = np.asarray(background, dtype=np.float64)
    coverage = np.zeros((camera.height, camera.width), dtype=bool)
    frame = _camera_frame(splats, camera)
    xs, ys = _ray_grid(camera, slice(0, camera.height), slice(0, camera.width))
    for s in range(len(frame.centers)):
        alpha = splat_alpha(frame, s, xs, ys)
        hit = alpha > 0
        blended = alpha[..., None] * frame.colors[s] + (1.0 - alpha[..., None]) * rgb
        rgb = np.where(hit[..., None], blended, rgb)
        coverage |= hit
    return RenderOutput(rgb, coverage)

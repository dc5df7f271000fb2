"""Procedural street scenes: road, sidewalks, lane stripes, buildings and poles."""
import logging

import numpy as np

from voxfield.ingest.mesh import Mesh
from voxfield.models import BUILDING, POLE, ROAD, ROAD_LANE, SIDEWALK, SceneSpec
from voxfield.utils.rng import derive_rng

logger = logging.getLogger(__name__)

# Base color per class before the per-seed jitter.
PALETTE = {
    ROAD: (0.25, 0.25, 0.27),
    SIDEWALK: (0.62, 0.60, 0.56),
    ROAD_LANE: (0.95, 0.93, 0.85),
    BUILDING: (0.70, 0.45, 0.35),
    POLE: (0.35, 0.38, 0.42),
}
COLOR_JITTER = 0.04
STRIPE_WIDTH = 0.15
STRIPE_LIFT = 0.01
POLE_SIDE = 0.2
BUILDING_SETBACK = 1.5


class _MeshBuilder:
    """Accumulates flat-shaded quads; each quad owns its vertices."""

    def __init__(self):
        self.vertices = []
        self.colors = []
        self.triangles = []
        self.semantics = []

    def quad(self, corners, color, label):
        base = len(self.vertices)
        self.vertices.extend(corners)
        self.colors.extend([color] * 4)
        self.triangles.append((base, base + 1, base + 2))
        self.triangles.append((base, base + 2, base + 3))
        self.semantics.extend([label, label])

    def horizontal(self, x0, x1, y0, y1, z, color, label):
        self.quad([(x0, y0, z), (x1, y0, z), (x1, y1, z), (x0, y1, z)], color, label)

    def box(self, x0, x1, y0, y1, z0, z1, color, label):
        """Four walls and a roof; the bottom is hidden by the ground."""
        walls = [
            [(x0, y0), (x1, y0)],
            [(x1, y0), (x1, y1)],
            [(x1, y1), (x0, y1)],
            [(x0, y1), (x0, y0)],
        ]
        for (ax, ay), (bx, by) in walls:
            self.quad(
                [(ax, ay, z0), (bx, by, z0), (bx, by, z1), (ax, ay, z1)], color, label
            )
        self.horizontal(x0, x1, y0, y1, z1, color, label)

    def build(self) -> Mesh:
        return Mesh(self.vertices, self.colors, self.triangles, self.semantics)


def _class_color(label, rng):
    jitter = rng.normal(0.0, COLOR_JITTER, size=3)
    return tuple(np.clip(np.asarray(PALETTE[label]) + jitter, 0.0, 1.0))


def synth_scene(spec: SceneSpec) -> Mesh:
    """
    Build a toy street scene, z up, the road running along x.

    The result is a pure function of `spec`: every primitive draws from its
    own stream derived from `spec.rng_seed`.
    """
    size_x, size_y, size_z = spec.extent
    ground = spec.ground_height
    road_lo = (size_y - spec.road_width) / 2.0
    road_hi = road_lo + spec.road_width
    band = road_lo
    builder = _MeshBuilder()

    rng = derive_rng(spec.rng_seed, 0)
    road_color = _class_color(ROAD, rng)
    builder.horizontal(0.0, size_x, road_lo, road_hi, ground, road_color, ROAD)
    sidewalk_color = _class_color(SIDEWALK, rng)
    if band > 0:
        builder.horizontal(0.0, size_x, 0.0, road_lo, ground, sidewalk_color, SIDEWALK)
        builder.horizontal(
            0.0, size_x, road_hi, size_y, ground, sidewalk_color, SIDEWALK
        )

    stripe_color = _class_color(ROAD_LANE, rng)
    period = spec.lane_stripe_period
    y_mid = size_y / 2.0
    start = period / 4.0
    while start + period / 2.0 <= size_x:
        builder.horizontal(
            start,
            start + period / 2.0,
            y_mid - STRIPE_WIDTH / 2.0,
            y_mid + STRIPE_WIDTH / 2.0,
            ground + STRIPE_LIFT,
            stripe_color,
            ROAD_LANE,
        )
        start += period

    max_height = max(size_z - ground - 0.5, 1.0)
    for b in range(spec.building_count):
        if band <= BUILDING_SETBACK + 0.5:
            logger.debug('Sidewalk band %.2f m too narrow for buildings', band)
            break
        brng = derive_rng(spec.rng_seed, 1, b)
        length = brng.uniform(3.0, 8.0)
        x0 = brng.uniform(0.0, max(size_x - length, 0.0))
        depth = brng.uniform(0.5, band - BUILDING_SETBACK)
        height = brng.uniform(min(3.0, max_height), min(8.0, max_height))
        if brng.random() < 0.5:
            y0, y1 = road_lo - BUILDING_SETBACK - depth, road_lo - BUILDING_SETBACK
        else:
            y0, y1 = road_hi + BUILDING_SETBACK, road_hi + BUILDING_SETBACK + depth
        builder.box(
            x0,
            min(x0 + length, size_x),
            y0,
            y1,
            ground,
            ground + height,
            _class_color(BUILDING, brng),
            BUILDING,
        )

    for p in range(spec.pole_count):
        prng = derive_rng(spec.rng_seed, 2, p)
        x = prng.uniform(POLE_SIDE, max(size_x - POLE_SIDE, POLE_SIDE))
        if prng.random() < 0.5:
            y = road_lo - 0.5
        else:
            y = road_hi + 0.5
        y = float(np.clip(y, POLE_SIDE, size_y - POLE_SIDE))
        height = prng.uniform(min(3.0, max_height), min(5.0, max_height))
        half = POLE_SIDE / 2.0
        builder.box(
            x - half,
            x + half,
            y - half,
            y + half,
            ground,
            ground + height,
            _class_color(POLE, prng),
            POLE,
        )

    mesh = builder.build()
    logger.debug('Synthesized %r from seed %d', mesh, spec.rng_seed)
    return mesh

"""
Reverse-process sampling with classifier-free guidance and Repaint.

Each token owns a noise stream derived from (seed, stage, i, j, k) and draws
one fixed-size block per reverse step whatever its role, so outputs do not
depend on token order, on the known/target partition of other rows, or on
whether sets are sampled serially or in parallel.
"""
import logging
from typing import Optional, Protocol

import numpy as np

from voxfield.diffusion.localset import LocalSet
from voxfield.diffusion.noise import cfg_combine, ddpm_step, q_sample, renoise_step
from voxfield.diffusion.schedule import NoiseSchedule
from voxfield.exceptions import ShapeMismatchError
from voxfield.models import NULL_LABEL
from voxfield.utils.rng import derive_rng

logger = logging.getLogger(__name__)

# Noise rows drawn per token and step: DDPM noise, known-row noise, jump-back.
_DRAWS = 3
REPAINT = 'repaint'
OVERWRITE = 'overwrite'


class Denoiser(Protocol):
    """Anything predicting clean tokens from noisy ones."""

    token_dim: int

    def predict(self, x_t, t: int, semantics, centers) -> np.ndarray:
        """Return x0_hat with the shape of `x_t`."""


class TokenStreams:
    """Per-token generators keyed by voxel index."""

    def __init__(self, seed: int, keys, stage: int = 0):
        self.generators = [derive_rng(seed, stage, *map(int, key)) for key in keys]

    def initial(self, dim: int, dtype=np.float64) -> np.ndarray:
        return np.stack([g.standard_normal(dim) for g in self.generators]).astype(dtype)

    def step(self, dim: int):
        """Return the (ddpm, known, jump) noise matrices of one reverse step."""
        blocks = np.stack([g.standard_normal((_DRAWS, dim)) for g in self.generators])
        return blocks[:, 0], blocks[:, 1], blocks[:, 2]


def guided_prediction(denoiser: Denoiser, x_t, t, semantics, centers, guidance_scale):
    """Predict x0; the NULL pass only runs when the scale differs from 1."""
    conditional = denoiser.predict(x_t, t, semantics, centers)
    if guidance_scale == 1.0:
        return conditional
    unconditional = denoiser.predict(
        x_t, t, np.full(len(semantics), NULL_LABEL), centers
    )
    return cfg_combine(conditional, unconditional, guidance_scale)


def repaint_sample(
    denoiser: Denoiser,
    local_set: LocalSet,
    schedule: NoiseSchedule,
    guidance_scale: float = 1.0,
    resample_count: int = 1,
    seed: int = 0,
    mode: str = REPAINT,
    clamp: bool = True,
    stage: int = 0,
) -> np.ndarray:
    """
    Complete the target rows of a local set.

    Known rows are replaced at every step: by their re-noised values at level
    t-1 in `repaint` mode, by the clean values in `overwrite` mode. After each
    step the chain jumps back one level `resample_count - 1` times. Known rows
    of the result equal the inputs exactly; target rows are clamped to [-1, 1]
    unless `clamp` is False.

    :param seed: Seed of the per-token noise streams.
    :param stage: Extra stream key, e.g. the region number.
    """
    if mode not in (REPAINT, OVERWRITE):
        raise ValueError('unknown repaint mode {!r}'.format(mode))
    if local_set.token_dim != denoiser.token_dim:
        raise ShapeMismatchError(
            'repaint_sample',
            local_set.tokens.shape,
            (len(local_set), denoiser.token_dim),
        )
    if resample_count < 1:
        raise ValueError('resample_count must be >= 1')
    known = local_set.known_mask
    known_x0 = local_set.tokens
    dim = local_set.token_dim
    if known.all():
        return known_x0.copy()

    streams = TokenStreams(seed, local_set.indices, stage)
    x = streams.initial(dim)
    rows = known[:, None]
    for t in range(schedule.T, 0, -1):
        for u in range(resample_count):
            x0_hat = guided_prediction(
                denoiser, x, t, local_set.semantics, local_set.centers, guidance_scale
            )
            ddpm_noise, known_noise, jump_noise = streams.step(dim)
            x_prev = ddpm_step(x, x0_hat, t, schedule, ddpm_noise)
            if known.any():
                if mode == OVERWRITE or t == 1:
                    known_prev = known_x0
                else:
                    known_prev = q_sample(known_x0, t - 1, known_noise, schedule)
                x_prev = np.where(rows, known_prev, x_prev)
            if u < resample_count - 1 and t > 1:
                x = renoise_step(x_prev, t, schedule, jump_noise)
            else:
                x = x_prev

    if clamp:
        x = np.clip(x, -1.0, 1.0)
    return np.where(rows, known_x0, x)


def sample(
    denoiser: Denoiser,
    semantics,
    centers,
    schedule: NoiseSchedule,
    guidance_scale: float = 1.0,
    seed: int = 0,
    keys: Optional[np.ndarray] = None,
    clamp: bool = True,
    stage: int = 0,
) -> np.ndarray:
    """
    Sample a local set from pure noise.

    Equivalent to `repaint_sample` with nothing known.

    :param keys: (N, 3) stream keys, normally the voxel indices; row numbers
        by default.
    """
    semantics = np.asarray(semantics, dtype=np.int64).reshape(-1)
    count = len(semantics)
    if keys is None:
        keys = np.stack([np.arange(count), np.zeros(count), np.zeros(count)], axis=1)
    local_set = LocalSet(
        keys,
        np.zeros((count, denoiser.token_dim)),
        semantics,
        centers,
    )
    return repaint_sample(
        denoiser,
        local_set,
        schedule,
        guidance_scale=guidance_scale,
        seed=seed,
        clamp=clamp,
        stage=stage,
    )

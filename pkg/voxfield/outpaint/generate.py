"""Progressive generation of a full grid from a semantic skeleton."""
import logging
import time
from typing import List, Optional

import numpy as np

from voxfield.core.grid import VoxfieldGrid
from voxfield.core.tokens import FEATURES_PER_SAMPLE, unflatten_tokens
from voxfield.diffusion.localset import LocalSet
from voxfield.diffusion.sampler import REPAINT, Denoiser, repaint_sample, sample
from voxfield.diffusion.schedule import NoiseSchedule
from voxfield.outpaint.regions import RegionPlan, bootstrap_region, extract_regions

logger = logging.getLogger(__name__)


class GenerationStats:
    """Counters filled in by `progressive_generate`."""

    def __init__(self):
        self.regions = 0
        self.skipped_regions = 0
        self.peak_tokens = 0
        self.uncovered = 0
        self.generated_voxels = 0
        self.region_seconds: List[float] = []
        self.plan: Optional[RegionPlan] = None

    @property
    def total_seconds(self) -> float:
        return float(sum(self.region_seconds))

    def __repr__(self):
        return (
            'GenerationStats(regions={}, skipped={}, '
            'peak_tokens={}, uncovered={})'.format(
                self.regions, self.skipped_regions, self.peak_tokens, self.uncovered
            )
        )


def progressive_generate(
    skeleton: VoxfieldGrid,
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    K: int = 150,
    T_cov: int = 30,
    guidance_scale: float = 4.0,
    seed: int = 0,
    resample_count: int = 1,
    mode: str = REPAINT,
    seed_index=None,
    complete: bool = True,
    stats: Optional[GenerationStats] = None,
) -> VoxfieldGrid:
    """
    Fill every voxel of a semantic skeleton with generated samples.

    The first region is sampled from noise; each later region is completed
    with Repaint, the voxels generated by earlier regions acting as known
    context. Generated voxels are never rewritten. At most K tokens are
    resident in the denoiser at any time.

    :param skeleton: Indices and labels; samples, if any, are ignored.
    :param complete: Cover voxels left over by the `T_cov` gate with a relaxed
        final pass (see `extract_regions`).
    :param stats: Filled in when given.
    """
    stats = stats if stats is not None else GenerationStats()
    n = denoiser.token_dim // FEATURES_PER_SAMPLE
    voxel_size = skeleton.voxel_size
    indices = skeleton.index_array()
    if len(indices) == 0:
        stats.plan = RegionPlan([], K, T_cov)
        return VoxfieldGrid(voxel_size, n, tuple(skeleton.origin))

    initial = bootstrap_region(indices, K, seed_index)
    plan = extract_regions(indices, K, T_cov, initial, complete=complete)
    stats.plan = plan
    stats.uncovered = plan.uncovered

    generated = {}
    for number, region in enumerate(plan.regions):
        started = time.perf_counter()
        keys = [tuple(int(v) for v in row) for row in region]
        known = np.array([key in generated for key in keys], dtype=bool)
        if known.all():
            stats.skipped_regions += 1
            logger.debug('Region %d has no target voxels, skipped', number)
            continue
        semantics = np.array([skeleton.label_of(key) for key in keys], dtype=np.int64)
        centers = skeleton.centers_of(region)
        stats.peak_tokens = max(stats.peak_tokens, len(region))

        if not known.any():
            tokens = sample(
                denoiser,
                semantics,
                centers,
                schedule,
                guidance_scale=guidance_scale,
                seed=seed,
                keys=region,
                stage=number,
            )
        else:
            context = np.zeros((len(region), denoiser.token_dim))
            for row, key in enumerate(keys):
                if known[row]:
                    context[row] = generated[key]
            local_set = LocalSet(region, context, semantics, centers, known)
            tokens = repaint_sample(
                denoiser,
                local_set,
                schedule,
                guidance_scale=guidance_scale,
                resample_count=resample_count,
                seed=seed,
                mode=mode,
                stage=number,
            )
        for row, key in enumerate(keys):
            if not known[row]:
                generated[key] = tokens[row]
        stats.regions += 1
        stats.region_seconds.append(time.perf_counter() - started)
        logger.debug(
            'Region %d: %d known, %d generated, %.3fs',
            number,
            int(known.sum()),
            int((~known).sum()),
            stats.region_seconds[-1],
        )

    if stats.skipped_regions:
        logger.warning('%d regions had no target voxels', stats.skipped_regions)
    keys = sorted(generated)
    tokens = np.array([generated[key] for key in keys])
    tokens = tokens.reshape(len(keys), denoiser.token_dim)
    voxfields = unflatten_tokens(tokens, voxel_size, n)
    entries = {
        key: (voxfield, skeleton.label_of(key))
        for key, voxfield in zip(keys, voxfields)
    }
    stats.generated_voxels = len(entries)
    return VoxfieldGrid(voxel_size, n, tuple(skeleton.origin), entries)

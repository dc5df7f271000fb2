"""
Library entry points, one per command.

Each function runs a full pipeline step from files to files and returns an
ordered summary that the CLI prints as `OK key=value ...`.
"""
import csv
import logging
import os
import time
from collections import OrderedDict
from typing import Optional, Sequence

import numpy as np

from voxfield.autograd.checkpoint import load_checkpoint, save_checkpoint
from voxfield.core.grid import skeleton_of
from voxfield.core.grid_io import read_grid, write_grid
from voxfield.core.tokens import flatten_tokens
from voxfield.denoiser.corpus import Corpus
from voxfield.denoiser.network import SigmaDenoiser
from voxfield.denoiser.train import train as train_denoiser
from voxfield.exceptions import CheckpointFormatError, ConfigError, EmptyGeometryError
from voxfield.ingest.chamfer import chamfer_terms
from voxfield.ingest.mesh import load_mesh, write_mesh
from voxfield.ingest.synth import synth_scene
from voxfield.ingest.voxelize import ClippedSurface, build_grid
from voxfield.metrics import token_mmd
from voxfield.models import (
    ConvertConfig,
    DenoiserConfig,
    EvalConfig,
    GenerateConfig,
    MmdConfig,
    RenderRunConfig,
    SceneSpec,
    ScheduleConfig,
    TrainRunConfig,
)
from voxfield.outpaint.generate import GenerationStats, progressive_generate
from voxfield.outpaint.regions import write_plan
from voxfield.render.camera import drive_trajectory, read_trajectory
from voxfield.render.image_io import write_image
from voxfield.render.rasterizer import render as render_frame
from voxfield.render.splats import build_splats
from voxfield.utils.paths import make_sure_path_exists, sidecar_path
from voxfield.utils.rng import derive_rng

logger = logging.getLogger(__name__)

SCHEDULE_KEYS = tuple(ScheduleConfig.model_fields)


def _write_csv(path, header, rows):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def synth(out_path: str, config: Optional[SceneSpec] = None) -> OrderedDict:
    """Write a procedural street scene as OBJ plus `.sem` sidecar."""
    config = config or SceneSpec()
    mesh = synth_scene(config)
    sem_path = write_mesh(mesh, out_path)
    logger.info('Wrote %d triangles to %s', mesh.face_count, out_path)
    return OrderedDict(
        [
            ('mesh', out_path),
            ('sidecar', sem_path),
            ('vertices', len(mesh.vertices)),
            ('triangles', mesh.face_count),
        ]
    )


def convert(
    mesh_path: str,
    out_path: str,
    config: Optional[ConvertConfig] = None,
    sidecar: Optional[str] = None,
    skeleton_path: Optional[str] = None,
) -> OrderedDict:
    """
    Voxelize a mesh into a VXF grid.

    :param sidecar: `.sem` labels; defaults to the mesh path with `.sem`.
    :param skeleton_path: Also write the sample-free skeleton of the grid.
    """
    config = config or ConvertConfig()
    mesh = load_mesh(mesh_path, sidecar)
    started = time.perf_counter()
    grid = build_grid(
        mesh,
        config.voxel_size,
        config.n,
        config.seed,
        config.origin,
        workers=config.workers,
    )
    write_grid(grid, out_path)
    summary = OrderedDict(
        [
            ('grid', out_path),
            ('voxels', len(grid)),
            ('n', grid.n),
            ('voxel_size', config.voxel_size),
            ('seconds', round(time.perf_counter() - started, 3)),
        ]
    )
    if skeleton_path:
        write_grid(skeleton_of(grid), skeleton_path)
        summary['skeleton'] = skeleton_path
    logger.info('Converted %s into %d voxels', mesh_path, len(grid))
    return summary


def train(
    corpus_paths: Sequence[str],
    checkpoint_path: str,
    config: Optional[TrainRunConfig] = None,
    loss_csv: Optional[str] = None,
) -> OrderedDict:
    """
    Train a denoiser on VXF grids and save a VXCK checkpoint.

    The loss curve is written as CSV with header `step,loss`.
    """
    config = config or TrainRunConfig()
    corpus = Corpus([read_grid(p) for p in corpus_paths])
    if corpus.n != config.n:
        logger.info('Corpus holds n=%d, overriding config n=%d', corpus.n, config.n)
        config = config.model_copy(update={'n': corpus.n})
    loss_csv = loss_csv or sidecar_path(checkpoint_path, '.loss.csv')
    result = train_denoiser(corpus, config)
    stored = {
        'denoiser': config.denoiser().model_dump(),
        'schedule': {k: getattr(config, k) for k in SCHEDULE_KEYS},
    }
    params = {name: p.data for name, p in result.params.items()}
    save_checkpoint(checkpoint_path, params, stored)
    _write_csv(loss_csv, ('step', 'loss'), enumerate(result.losses, start=1))
    logger.info(
        'Trained %d steps, loss %.5f -> %.5f',
        config.steps,
        result.losses[0],
        result.losses[-1],
    )
    return OrderedDict(
        [
            ('checkpoint', checkpoint_path),
            ('loss_csv', loss_csv),
            ('steps', config.steps),
            ('initial_loss', '{:.6g}'.format(result.losses[0])),
            ('final_loss', '{:.6g}'.format(result.losses[-1])),
        ]
    )


def load_denoiser(checkpoint_path: str):
    """Return (SigmaDenoiser, stored schedule dict or None) from a checkpoint."""
    params, stored = load_checkpoint(checkpoint_path)
    if not stored or 'denoiser' not in stored:
        raise CheckpointFormatError(
            '{} carries no denoiser config'.format(checkpoint_path)
        )
    config = DenoiserConfig(**stored['denoiser'])
    return SigmaDenoiser(params, config), stored.get('schedule')


def generate(
    skeleton_path: str,
    checkpoint_path: str,
    out_path: str,
    config: Optional[GenerateConfig] = None,
    plan_path: Optional[str] = None,
) -> OrderedDict:
    """Fill a semantic skeleton with generated samples by spatial outpainting."""
    config = config or GenerateConfig()
    denoiser, trained_schedule = load_denoiser(checkpoint_path)
    schedule_values = {k: getattr(config, k) for k in SCHEDULE_KEYS}
    if trained_schedule and trained_schedule != schedule_values:
        logger.warning(
            'Sampling schedule %s differs from the training schedule %s',
            schedule_values,
            trained_schedule,
        )
    skeleton = skeleton_of(read_grid(skeleton_path))
    if config.seed_index is not None and config.seed_index not in skeleton:
        raise ConfigError(
            'seed index {} is not an occupied voxel of {}'.format(
                config.seed_index, skeleton_path
            ),
            key='seed_index',
        )
    stats = GenerationStats()
    grid = progressive_generate(
        skeleton,
        denoiser,
        config.build(),
        K=config.K,
        T_cov=config.T_cov,
        guidance_scale=config.guidance_scale,
        seed=config.seed,
        resample_count=config.resample_count,
        mode=config.repaint_mode,
        seed_index=config.seed_index,
        complete=config.complete_coverage,
        stats=stats,
    )
    write_grid(grid, out_path)
    if plan_path:
        write_plan(stats.plan, plan_path)
    logger.info(
        'Generated %d voxels in %d regions (%.2fs)',
        stats.generated_voxels,
        stats.regions,
        stats.total_seconds,
    )
    return OrderedDict(
        [
            ('grid', out_path),
            ('voxels', stats.generated_voxels),
            ('regions', stats.regions),
            ('skipped_regions', stats.skipped_regions),
            ('peak_tokens', stats.peak_tokens),
        ]
    )


def render(
    grid_path: str,
    out_dir: str,
    config: Optional[RenderRunConfig] = None,
    trajectory_path: Optional[str] = None,
) -> OrderedDict:
    """
    Render frames of a grid as `frame_%04d.ppm` plus `frame_%04d_mask.pgm`.

    The mask is the sky mask: 255 where no splat contributed. Without a
    trajectory file, a drive along the long axis of the grid is used.
    """
    config = config or RenderRunConfig()
    grid = read_grid(grid_path)
    if len(grid) == 0 or grid.n == 0:
        raise EmptyGeometryError('{} holds no samples to render'.format(grid_path))
    if trajectory_path:
        cameras = read_trajectory(trajectory_path)
    else:
        cameras = drive_trajectory(
            grid,
            config.frames,
            config.width,
            config.height,
            config.fx,
            config.camera_height,
        )
    splats = build_splats(
        grid, config.splat_radius, config.normal_k, config.normal_radius
    )
    make_sure_path_exists(out_dir)
    sky = 0.0
    for number, camera in enumerate(cameras):
        output = render_frame(splats, camera, config.background, workers=config.workers)
        stem = os.path.join(out_dir, 'frame_{:04d}'.format(number))
        write_image(output.rgb, stem + '.ppm', 'ppm')
        write_image(output.sky, stem + '_mask.pgm', 'pgm')
        sky += float(output.sky.mean())
        logger.debug('Frame %d: sky fraction %.3f', number, output.sky.mean())
    logger.info('Rendered %d frames of %d splats', len(cameras), len(splats))
    return OrderedDict(
        [
            ('out_dir', out_dir),
            ('frames', len(cameras)),
            ('splats', len(splats)),
            ('sky_fraction', '{:.4f}'.format(sky / max(len(cameras), 1))),
        ]
    )


def evaluate_chamfer(
    grid_path: str,
    mesh_path: str,
    out_csv: str,
    config: Optional[EvalConfig] = None,
    sidecar: Optional[str] = None,
) -> OrderedDict:
    """
    Chamfer distance of a grid against its mesh, plus an n sweep.

    The sweep rebuilds the grid from the mesh at every n in `n_sweep` on the
    given grid's voxel size and origin. CSV header:
    `n,chamfer,grid_to_mesh,mesh_to_grid`.
    """
    config = config or EvalConfig()
    grid = read_grid(grid_path)
    mesh = load_mesh(mesh_path, sidecar)
    measured = chamfer_terms(grid, mesh, config.probe_count, config.seed)
    surface = ClippedSurface(mesh, grid.voxel_size, tuple(grid.origin))
    rows = []
    for n in config.n_sweep:
        swept = build_grid(
            mesh, grid.voxel_size, n, config.seed, tuple(grid.origin), surface=surface
        )
        terms = chamfer_terms(swept, mesh, config.probe_count, config.seed)
        rows.append(
            (
                n,
                '{:.6f}'.format(terms.distance),
                '{:.6f}'.format(terms.grid_to_mesh),
                '{:.6f}'.format(terms.mesh_to_grid),
            )
        )
        logger.info('n=%d chamfer %.5f m', n, terms.distance)
    _write_csv(out_csv, ('n', 'chamfer', 'grid_to_mesh', 'mesh_to_grid'), rows)
    return OrderedDict(
        [
            ('csv', out_csv),
            ('n', grid.n),
            ('chamfer', '{:.6f}'.format(measured.distance)),
            ('sweep', len(rows)),
        ]
    )


def _corpus_tokens(paths: Sequence[str]) -> np.ndarray:
    grids = [read_grid(p) for p in paths]
    blocks = [
        flatten_tokens([v for _, (v, _) in g.items()], g.voxel_size)
        for g in grids
        if len(g) and g.n
    ]
    if not blocks:
        raise EmptyGeometryError('corpus {} holds no samples'.format(list(paths)))
    return np.concatenate(blocks)


def evaluate_mmd(
    paths_a: Sequence[str], paths_b: Sequence[str], config: Optional[MmdConfig] = None
) -> OrderedDict:
    """Token MMD between two VXF corpora with one common n."""
    config = config or MmdConfig()
    tokens_a = _corpus_tokens(paths_a)
    tokens_b = _corpus_tokens(paths_b)
    mmd = token_mmd(
        tokens_a,
        tokens_b,
        bandwidth=config.bandwidth,
        max_tokens=config.max_tokens,
        rng=derive_rng(config.seed),
    )
    logger.info('Token MMD %.6g over %d / %d tokens', mmd, len(tokens_a), len(tokens_b))
    return OrderedDict(
        [
            ('mmd', '{:.6g}'.format(mmd)),
            ('tokens_a', len(tokens_a)),
            ('tokens_b', len(tokens_b)),
        ]
    )

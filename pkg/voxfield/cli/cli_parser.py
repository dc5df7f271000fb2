"""Main `voxfield` CLI."""
import collections
import os
import sys

import click
from pydantic import ValidationError
from rich.traceback import install

from voxfield import __version__
from voxfield import main as pipelines
from voxfield.exceptions import EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, VoxfieldException
from voxfield.models import (
    ConvertConfig,
    EvalConfig,
    GenerateConfig,
    MmdConfig,
    RenderRunConfig,
    SceneSpec,
    TrainRunConfig,
)
from voxfield.settings import get_run_config, get_settings
from voxfield.utils.log import configure_logger


def version_msg():
    """Return the voxfield version, location and Python powering it."""
    python_version = '{}.{}'.format(*sys.version_info[:2])
    location = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    message = 'voxfield %(version)s from {} (Python {})'
    return message.format(location, python_version)


def validate_overrides(ctx, param, value):
    """Turn repeated `--set key=value` options into an ordered dict."""
    for s in value:
        if '=' not in s:
            raise click.BadParameter(
                '--set takes items of the form key=value; '
                "'{}' doesn't match that form".format(s)
            )
    return collections.OrderedDict(
        (k.strip(), v.strip()) for k, v in (s.split('=', 1) for s in value)
    )


def format_summary(summary) -> str:
    return ' '.join(['OK'] + ['{}={}'.format(k, v) for k, v in summary.items()])


def config_options(func):
    """Options shared by every pipeline command."""
    func = click.option(
        '--seed', type=int, default=None, help='Global seed, overrides the config.'
    )(func)
    func = click.option(
        '--set',
        'overrides',
        multiple=True,
        callback=validate_overrides,
        help='Override one config key, e.g. --set n=20. Repeatable.',
    )(func)
    func = click.option(
        '-c',
        '--config',
        'config_file',
        type=click.Path(),
        default=None,
        help='key=value (or yaml / json) config file.',
    )(func)
    return func


def run_pipeline(model, config_file, overrides, seed, function, *args, **kwargs):
    """Build the run config, call a pipeline and report the outcome."""
    settings = click.get_current_context().obj
    try:
        config = get_run_config(
            model,
            config_file,
            overrides,
            seed,
            defaults={'workers': settings.workers},
        )
        summary = function(*args, config=config, **kwargs)
    except VoxfieldException as e:
        click.echo('Error: {}'.format(e), err=True)
        sys.exit(e.exit_code)
    except OSError as e:
        click.echo('Error: {}'.format(e), err=True)
        sys.exit(EXIT_DATA_ERROR)
    click.echo(format_summary(summary))


@click.group(context_settings=dict(help_option_names=['-h', '--help']))
@click.version_option(__version__, '-V', '--version', message=version_msg())
@click.option(
    '-v', '--verbose', is_flag=True, help='Print debug information', default=False
)
@click.option(
    '--debug-file',
    type=click.Path(),
    default=None,
    help='File to be used as a stream for DEBUG logging',
)
@click.option(
    '-rt', '--rich-trace', is_flag=True, help='Creates a rich traceback for debugging.'
)
@click.pass_context
def main(ctx, verbose, debug_file, rich_trace):
    """Build, generate and render Sigma-Voxfield street scenes."""
    # Set a rich traceback mode for debugging.
    if rich_trace:
        install()  # From rich

    try:
        settings = get_settings()
    except ValidationError as e:
        first = e.errors()[0]
        key = 'VOXFIELD_{}'.format(str(first['loc'][0]).upper())
        click.echo('Error: {}: {}'.format(key, first['msg']), err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    level = 'DEBUG' if verbose else settings.log_level
    configure_logger(stream_level=level, debug_file=debug_file)
    ctx.obj = settings


@main.command()
@click.argument('out', type=click.Path())
@config_options
def synth(out, config_file, overrides, seed):
    """Write a procedural street scene mesh (OBJ + .sem) to OUT."""
    run_pipeline(SceneSpec, config_file, overrides, seed, pipelines.synth, out)


@main.command()
@click.argument('mesh', type=click.Path(exists=True))
@click.argument('out', type=click.Path())
@click.option('--sidecar', type=click.Path(exists=True), help='Semantic labels.')
@click.option(
    '--skeleton', type=click.Path(), default=None, help='Also write the skeleton.'
)
@config_options
def convert(mesh, out, sidecar, skeleton, config_file, overrides, seed):
    """Voxelize MESH into the VXF grid OUT."""
    run_pipeline(
        ConvertConfig,
        config_file,
        overrides,
        seed,
        pipelines.convert,
        mesh,
        out,
        sidecar=sidecar,
        skeleton_path=skeleton,
    )


@main.command()
@click.argument('corpus', nargs=-1, required=True, type=click.Path(exists=True))
@click.option(
    '-o', '--checkpoint', type=click.Path(), required=True, help='VXCK output.'
)
@click.option('--loss-csv', type=click.Path(), default=None, help='step,loss log.')
@config_options
def train(corpus, checkpoint, loss_csv, config_file, overrides, seed):
    """Train a denoiser on the VXF grids in CORPUS."""
    run_pipeline(
        TrainRunConfig,
        config_file,
        overrides,
        seed,
        pipelines.train,
        list(corpus),
        checkpoint,
        loss_csv=loss_csv,
    )


@main.command()
@click.argument('skeleton', type=click.Path(exists=True))
@click.argument('checkpoint', type=click.Path(exists=True))
@click.argument('out', type=click.Path())
@click.option('--plan', type=click.Path(), default=None, help='Region plan output.')
@config_options
def generate(skeleton, checkpoint, out, plan, config_file, overrides, seed):
    """Fill the semantic SKELETON grid using CHECKPOINT, writing OUT."""
    run_pipeline(
        GenerateConfig,
        config_file,
        overrides,
        seed,
        pipelines.generate,
        skeleton,
        checkpoint,
        out,
        plan_path=plan,
    )


@main.command()
@click.argument('grid', type=click.Path(exists=True))
@click.argument('out_dir', type=click.Path())
@click.option(
    '--trajectory',
    type=click.Path(exists=True),
    default=None,
    help='Camera blocks; defaults to a drive along the scene.',
)
@config_options
def render(grid, out_dir, trajectory, config_file, overrides, seed):
    """Render GRID into OUT_DIR as PPM frames with PGM sky masks."""
    run_pipeline(
        RenderRunConfig,
        config_file,
        overrides,
        seed,
        pipelines.render,
        grid,
        out_dir,
        trajectory_path=trajectory,
    )


@main.group(name='eval')
def evaluate():
    """Evaluation metrics."""


@evaluate.command()
@click.argument('grid', type=click.Path(exists=True))
@click.argument('mesh', type=click.Path(exists=True))
@click.argument('out_csv', type=click.Path())
@click.option('--sidecar', type=click.Path(exists=True), help='Semantic labels.')
@config_options
def chamfer(grid, mesh, out_csv, sidecar, config_file, overrides, seed):
    """Chamfer distance of GRID to MESH plus an n sweep written to OUT_CSV."""
    run_pipeline(
        EvalConfig,
        config_file,
        overrides,
        seed,
        pipelines.evaluate_chamfer,
        grid,
        mesh,
        out_csv,
        sidecar=sidecar,
    )


@evaluate.command()
@click.option(
    '-a', 'corpus_a', multiple=True, required=True, type=click.Path(exists=True)
)
@click.option(
    '-b', 'corpus_b', multiple=True, required=True, type=click.Path(exists=True)
)
@config_options
def mmd(corpus_a, corpus_b, config_file, overrides, seed):
    """Token MMD between two VXF corpora (-a ... and -b ...)."""
    run_pipeline(
        MmdConfig,
        config_file,
        overrides,
        seed,
        pipelines.evaluate_mmd,
        list(corpus_a),
        list(corpus_b),
    )


if __name__ == "__main__":
    main()

"""Fixtures for running CLI tests on a tiny scene."""
import pytest

SCENE_CFG = """\
# tiny street
extent = 6 6 3
road_width = 2
lane_stripe_period = 3
building_count = 1
pole_count = 1
"""

TRAIN_CFG = """\
steps = 3
batch_size = 2
set_size_min = 5
set_size_max = 10
model_dim = 8
layer_count = 1
head_count = 2
head_dim = 4
timestep_embedding_dim = 8
pe_dim = 6
T = 10
dtype = float64
"""

GENERATE_CFG = """\
T = 10
K = 20
T_cov = 1
guidance_scale = 2.0
"""

RENDER_CFG = """\
frames = 2
width = 32
height = 16
fx = 20
"""


def run_ok(cli_runner, *args, **kwargs):
    """Invoke the CLI and return the `OK` summary as a dict."""
    result = cli_runner(*args, **kwargs)
    assert result.exit_code == 0, result.output
    line = result.output.strip().splitlines()[-1]
    words = line.split()
    assert words[0] == 'OK'
    return dict(word.split('=', 1) for word in words[1:])


@pytest.fixture(scope='session')
def cli_ok(cli_runner):
    """Return a helper running the cli and parsing its `OK` line."""

    def run(*args, **kwargs):
        return run_ok(cli_runner, *args, **kwargs)

    return run


@pytest.fixture(scope='session')
def pipeline(tmp_path_factory, cli_runner):
    """Run synth, convert, train and generate once for the whole session."""
    root = tmp_path_factory.mktemp('pipeline')
    files = {name: str(root / name) for name in ('scene.obj', 'grid.vxf')}
    files.update(
        skeleton=str(root / 'skeleton.vxf'),
        checkpoint=str(root / 'model.vxck'),
        generated=str(root / 'generated.vxf'),
        plan=str(root / 'plan.txt'),
    )
    for name, text in (
        ('scene', SCENE_CFG),
        ('train', TRAIN_CFG),
        ('generate', GENERATE_CFG),
        ('render', RENDER_CFG),
    ):
        path = root / '{}.cfg'.format(name)
        path.write_text(text)
        files[name + '_cfg'] = str(path)

    summaries = {
        'synth': run_ok(
            cli_runner, 'synth', files['scene.obj'], '-c', files['scene_cfg']
        ),
        'convert': run_ok(
            cli_runner,
            'convert',
            files['scene.obj'],
            files['grid.vxf'],
            '--skeleton',
            files['skeleton'],
            '--set',
            'n=2',
        ),
        'train': run_ok(
            cli_runner,
            'train',
            files['grid.vxf'],
            '-o',
            files['checkpoint'],
            '-c',
            files['train_cfg'],
            '--seed',
            '1',
        ),
        'generate': run_ok(
            cli_runner,
            'generate',
            files['skeleton'],
            files['checkpoint'],
            files['generated'],
            '--plan',
            files['plan'],
            '-c',
            files['generate_cfg'],
        ),
    }
    return root, files, summaries

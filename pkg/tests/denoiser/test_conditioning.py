"""Train on a two-class toy corpus and check that guidance follows the labels."""
import numpy as np
import pytest

from voxfield.core.grid import VoxfieldGrid
from voxfield.core.tokens import unflatten_tokens
from voxfield.core.voxfield import SigmaVoxfield
from voxfield.denoiser.corpus import Corpus
from voxfield.denoiser.network import SigmaDenoiser
from voxfield.denoiser.train import train
from voxfield.diffusion.sampler import sample
from voxfield.models import TrainRunConfig

RED = np.array([0.9, 0.2, 0.2])
BLUE = np.array([0.2, 0.2, 0.9])
SAMPLE_POSITIONS = np.array([[0.1, 0.0, 0.0], [0.0, 0.2, 0.0]])


def two_class_grid(seed, side=6):
    """Left half red (class 0), right half blue (class 1), tight color spread."""
    rng = np.random.default_rng(seed)
    entries = {}
    for i in range(side):
        for j in range(side):
            label = 0 if i < side // 2 else 1
            color = RED if label == 0 else BLUE
            positions = SAMPLE_POSITIONS + rng.normal(0.0, 0.005, (2, 3))
            colors = np.clip(color + rng.normal(0.0, 0.02, (2, 3)), 0.0, 1.0)
            entries[(i, j, 0)] = (SigmaVoxfield(positions, colors), label)
    return VoxfieldGrid(0.6, 2, entries=entries)


@pytest.fixture(scope='module')
def trained():
    config = TrainRunConfig(
        n=2,
        model_dim=16,
        layer_count=1,
        head_count=2,
        head_dim=8,
        timestep_embedding_dim=16,
        pe_dim=6,
        T=20,
        steps=400,
        batch_size=4,
        set_size_min=8,
        set_size_max=16,
        learning_rate=1e-2,
        cfg_dropout=0.1,
        dtype='float64',
        seed=11,
    )
    corpus = Corpus([two_class_grid(seed) for seed in range(3)])
    result = train(corpus, config)
    return config, result


def test_loss_falls_five_fold(trained):
    _, result = trained
    assert np.all(np.isfinite(result.losses))
    assert np.mean(result.losses[-20:]) * 5.0 <= np.mean(result.losses[:5])


def test_guided_samples_follow_their_class(trained):
    config, result = trained
    denoiser = SigmaDenoiser(result.params, config.denoiser())
    schedule = config.schedule()
    indices = np.array([[i, j, 0] for i in range(4) for j in range(3)])
    semantics = np.array([0 if i < 2 else 1 for i, _, _ in indices])
    centers = (indices + 0.5) * 0.6
    hits = []
    for seed in range(20):
        tokens = sample(
            denoiser,
            semantics,
            centers,
            schedule,
            guidance_scale=4.0,
            seed=seed,
            keys=indices,
        )
        voxfields = unflatten_tokens(tokens, 0.6, 2)
        colors = np.array([v.colors.mean(axis=0) for v in voxfields])
        for label, own, other in ((0, RED, BLUE), (1, BLUE, RED)):
            mean = colors[semantics == label].mean(axis=0)
            hits.append(np.linalg.norm(mean - own) < np.linalg.norm(mean - other))
    assert np.mean(hits) >= 0.9

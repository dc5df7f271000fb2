"""Tests for `voxfield.denoiser.train`."""
import numpy as np
import pytest

from voxfield.autograd.optim import AdamState
from voxfield.autograd.tensor import Tensor
from voxfield.denoiser.corpus import Corpus
from voxfield.denoiser.network import init_params
from voxfield.denoiser.train import batch_loss, train, train_step
from voxfield.exceptions import EmptyBatchError, NonFiniteLossError
from voxfield.models import NULL_LABEL, TrainRunConfig
from voxfield.utils.rng import derive_rng


def tiny_config(**kwargs):
    values = dict(
        n=2,
        model_dim=8,
        layer_count=1,
        head_count=2,
        head_dim=4,
        timestep_embedding_dim=8,
        pe_dim=6,
        T=20,
        steps=5,
        batch_size=2,
        set_size_min=4,
        set_size_max=8,
        dtype='float64',
    )
    values.update(kwargs)
    return TrainRunConfig(**values)


@pytest.fixture
def corpus(grid_factory):
    return Corpus([grid_factory(voxel_count=16, n=2), grid_factory(seed=1, n=2)])


def test_train_records_losses(corpus):
    seen = []
    result = train(corpus, tiny_config(), on_step=lambda s, l: seen.append((s, l)))
    assert len(result.losses) == 5
    assert [s for s, _ in seen] == [1, 2, 3, 4, 5]
    assert all(np.isfinite(result.losses))
    assert set(result.params) == set(init_params(tiny_config().denoiser()))


def test_train_is_deterministic(corpus):
    a = train(corpus, tiny_config(seed=3))
    b = train(corpus, tiny_config(seed=3))
    c = train(corpus, tiny_config(seed=4))
    assert a.losses == b.losses
    assert a.losses != c.losses
    for name in a.params:
        assert np.array_equal(a.params[name].data, b.params[name].data)


def test_train_checks_n(corpus):
    with pytest.raises(ValueError):
        train(corpus, tiny_config(n=3))


def test_overfits_fixed_batch(corpus):
    """Repeating one batch with fixed noise drives the loss down at least 10x."""
    config = tiny_config(
        model_dim=16, head_dim=8, cfg_dropout=0.0, learning_rate=1e-2
    )
    batch = corpus.sample(1, (6, 6), np.random.default_rng(0))
    schedule = config.schedule()
    params = init_params(config.denoiser(), seed=0)
    state = AdamState.zeros(params)
    losses = []
    for _ in range(200):
        result = train_step(batch, schedule, params, state, derive_rng(5), config)
        params, state = result.params, result.opt_state
        losses.append(result.loss)
    assert losses[-1] * 10 <= losses[0]


def test_perfect_prediction_has_zero_loss(corpus, mocker):
    config = tiny_config()
    batch = corpus.sample(3, (4, 4), np.random.default_rng(0))
    targets = iter([s.tokens for s in batch])
    mocker.patch(
        'voxfield.denoiser.train.forward',
        side_effect=lambda *args, **kwargs: Tensor(next(targets)),
    )
    loss = batch_loss(batch, config.schedule(), {}, np.random.default_rng(0), config)
    assert loss.item() == 0.0


def test_dropout_replaces_all_labels(corpus, mocker):
    config = tiny_config(cfg_dropout=1.0)
    batch = corpus.sample(2, (4, 4), np.random.default_rng(0))
    seen = []

    def fake_forward(params, tokens, t, semantics, centers, cfg):
        seen.append(np.asarray(semantics))
        return Tensor(np.zeros(tokens.shape))

    mocker.patch('voxfield.denoiser.train.forward', side_effect=fake_forward)
    batch_loss(batch, config.schedule(), {}, np.random.default_rng(0), config)
    assert len(seen) == 2
    assert all(np.all(s == NULL_LABEL) for s in seen)


def test_empty_batch(corpus):
    config = tiny_config()
    params = init_params(config.denoiser())
    with pytest.raises(EmptyBatchError):
        train_step(
            [],
            config.schedule(),
            params,
            AdamState.zeros(params),
            np.random.default_rng(0),
            config,
        )


def test_non_finite_loss(corpus):
    config = tiny_config()
    params = init_params(config.denoiser())
    params['out.b'] = Tensor(np.full(12, np.nan), name='out.b')
    batch = corpus.sample(1, (4, 4), np.random.default_rng(0))
    with pytest.raises(NonFiniteLossError):
        train_step(
            batch,
            config.schedule(),
            params,
            AdamState.zeros(params),
            np.random.default_rng(0),
            config,
        )


@pytest.mark.parametrize('dropout', [0.0, 1.0])
def test_dropout_gradient_rows(corpus, dropout):
    """Only the embedding rows that were looked up receive gradient."""
    config = tiny_config(cfg_dropout=dropout)
    batch = corpus.sample(2, (4, 6), np.random.default_rng(1))
    params = init_params(config.denoiser(), seed=2)
    result = train_step(
        batch,
        config.schedule(),
        params,
        AdamState.zeros(params),
        np.random.default_rng(3),
        config,
    )
    grad = result.grads['semantic.emb']
    used = np.unique(np.concatenate([s.semantics for s in batch]))
    class_rows = np.delete(grad, NULL_LABEL, axis=0)
    if dropout == 0.0:
        assert np.all(grad[NULL_LABEL] == 0.0)
        assert all(np.any(grad[label] != 0.0) for label in used)
    else:
        assert np.all(class_rows == 0.0)
        assert np.any(grad[NULL_LABEL] != 0.0)

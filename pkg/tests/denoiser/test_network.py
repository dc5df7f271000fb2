"""Tests for `voxfield.denoiser.network`."""
import numpy as np
import pytest

from voxfield.autograd import tensor as ops
from voxfield.autograd.tensor import Tensor, backward, recording
from voxfield.denoiser.network import (
    EMBEDDING_ROWS,
    SigmaDenoiser,
    check_params,
    forward,
    init_params,
)
from voxfield.exceptions import DimensionMismatchError, ShapeMismatchError
from voxfield.models import NULL_LABEL, DenoiserConfig


@pytest.fixture(scope='module')
def config():
    return DenoiserConfig(
        n=1,
        model_dim=8,
        layer_count=2,
        head_count=2,
        head_dim=4,
        mlp_ratio=2,
        timestep_embedding_dim=8,
        pe_dim=6,
        attention_radius=3.0,
        dtype='float64',
    )


@pytest.fixture(scope='module')
def inputs():
    rng = np.random.default_rng(0)
    centers = rng.uniform(0, 4, (10, 3))
    tokens = rng.uniform(-1, 1, (10, 6))
    semantics = np.array([0, 1, 2, 13, 0, NULL_LABEL, 5, 19, 1, 2])
    return tokens, semantics, centers


def test_output_shape(config, inputs):
    tokens, semantics, centers = inputs
    params = init_params(config, seed=0)
    out = forward(params, tokens, 10, semantics, centers, config)
    assert out.shape == (10, 6)
    assert out.dtype == np.float64


def test_parameter_layout(config):
    params = init_params(config)
    assert params['semantic.emb'].shape == (EMBEDDING_ROWS, 8)
    assert params['token.w'].shape == (6, 8)
    assert 'block1.mlp.w2' in params
    assert not params['block0.ada.w'].data.any()
    assert all(p.name == name for name, p in params.items())


def test_init_is_seeded(config):
    a, b = init_params(config, seed=3), init_params(config, seed=3)
    c = init_params(config, seed=4)
    assert all(np.array_equal(a[k].data, b[k].data) for k in a)
    assert not np.array_equal(a['token.w'].data, c['token.w'].data)


def test_float32_parameters():
    config = DenoiserConfig(n=1, model_dim=8, head_count=2, head_dim=4, pe_dim=6)
    assert init_params(config)['out.w'].dtype == np.float32


def test_wrong_token_width(config, inputs):
    tokens, semantics, centers = inputs
    with pytest.raises(DimensionMismatchError):
        forward(init_params(config), tokens[:, :5], 3, semantics, centers, config)


def test_wrong_label_count(config, inputs):
    tokens, semantics, centers = inputs
    with pytest.raises(ShapeMismatchError):
        forward(init_params(config), tokens, 3, semantics[:4], centers, config)


def test_permutation_equivariance(config, inputs):
    tokens, semantics, centers = inputs
    params = init_params(config, seed=1, zero_init=False)
    order = np.random.default_rng(5).permutation(10)
    out = forward(params, tokens, 7, semantics, centers, config).data
    permuted = forward(
        params, tokens[order], 7, semantics[order], centers[order], config
    ).data
    assert np.allclose(out[order], permuted, atol=1e-10)


def test_translation_invariance(config, inputs):
    tokens, semantics, centers = inputs
    params = init_params(config, seed=1, zero_init=False)
    out = forward(params, tokens, 7, semantics, centers, config).data
    moved = forward(params, tokens, 7, semantics, centers + 50.0, config).data
    assert np.allclose(out, moved, atol=1e-8)


def test_attention_is_local(config):
    """A token out of reach of every layer does not change the others."""
    params = init_params(config, seed=2, zero_init=False)
    centers = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [20, 0, 0]], float)
    tokens = np.random.default_rng(0).uniform(-1, 1, (4, 6))
    changed = tokens.copy()
    changed[3] = -changed[3]
    semantics = [0, 1, 2, 3]
    a = forward(params, tokens, 5, semantics, centers, config).data
    b = forward(params, changed, 5, semantics, centers, config).data
    assert np.allclose(a[:3], b[:3], atol=1e-12)
    assert not np.allclose(a[3], b[3])


def test_labels_condition_the_output(config, inputs):
    tokens, semantics, centers = inputs
    params = init_params(config, seed=1, zero_init=False)
    a = forward(params, tokens, 7, semantics, centers, config).data
    b = forward(params, tokens, 7, np.full(10, NULL_LABEL), centers, config).data
    assert not np.allclose(a, b)


def test_timestep_conditions_the_output(config, inputs):
    tokens, semantics, centers = inputs
    params = init_params(config, seed=1, zero_init=False)
    a = forward(params, tokens, 7, semantics, centers, config).data
    b = forward(params, tokens, 70, semantics, centers, config).data
    assert not np.allclose(a, b)


@pytest.mark.parametrize('direction_seed', range(4))
def test_gradient_matches_finite_differences(config, inputs, direction_seed):
    """Directional derivatives of the full model loss in float64."""
    tokens, semantics, centers = inputs
    target = np.random.default_rng(11).uniform(-1, 1, tokens.shape)
    base = {k: p.data for k, p in init_params(config, 4, zero_init=False).items()}
    rng = np.random.default_rng(direction_seed)
    direction = {k: rng.standard_normal(v.shape) for k, v in base.items()}

    def loss_at(step):
        params = {
            k: Tensor(v + step * direction[k], name=k) for k, v in base.items()
        }
        loss = ops.mse(forward(params, tokens, 9, semantics, centers, config), target)
        return params, loss

    with recording() as tape:
        params, loss = loss_at(0.0)
    grads = backward(tape, loss, wrt=params.values())
    analytic = sum(np.sum(grads[params[k]] * direction[k]) for k in base)
    h = 1e-6
    numeric = (loss_at(h)[1].item() - loss_at(-h)[1].item()) / (2 * h)
    assert abs(analytic - numeric) <= 1e-4 * max(abs(analytic), abs(numeric))


def test_check_params(config):
    params = init_params(config)
    check_params(params, config)
    del params['out.b']
    with pytest.raises(ShapeMismatchError):
        check_params(params, config)
    params = init_params(config)
    params['out.b'] = Tensor(np.zeros(7))
    with pytest.raises(ShapeMismatchError):
        check_params(params, config)


def test_sigma_denoiser(config, inputs):
    tokens, semantics, centers = inputs
    arrays = {k: p.data for k, p in init_params(config, seed=1).items()}
    denoiser = SigmaDenoiser(arrays, config)
    assert denoiser.token_dim == 6
    out = denoiser.predict(tokens, 4, semantics, centers)
    assert isinstance(out, np.ndarray)
    assert out.shape == (10, 6)
    assert sorted(denoiser.arrays()) == sorted(arrays)


def test_sigma_denoiser_rejects_other_architecture(config):
    arrays = {k: p.data for k, p in init_params(config).items()}
    wider = config.model_copy(update={'n': 2})
    with pytest.raises(ShapeMismatchError):
        SigmaDenoiser(arrays, wider)

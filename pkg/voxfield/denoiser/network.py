"""
The token-set denoiser.

Tokens are embedded with a linear map plus a projected 3D positional encoding
plus a semantic embedding (row NULL_LABEL holds the learned null embedding).
Pre-norm transformer blocks attend only within `attention_radius`; the
timestep drives per-block adaptive layer norms whose gates start at zero, so
every block starts as the identity.
"""
import logging
from typing import Dict, Mapping

import numpy as np

from voxfield.autograd import tensor as ops
from voxfield.autograd.tensor import Tensor
from voxfield.denoiser.encoding import (
    build_attention_mask,
    encode_positions,
    timestep_embedding,
)
from voxfield.exceptions import DimensionMismatchError, ShapeMismatchError
from voxfield.models import CLASS_COUNT, DenoiserConfig
from voxfield.utils.rng import derive_rng

logger = logging.getLogger(__name__)

EMBEDDING_ROWS = CLASS_COUNT + 1
# adaLN chunks per block: shift, scale and gate for attention and MLP.
_BLOCK_CHUNKS = 6
_FINAL_CHUNKS = 2

Params = Dict[str, Tensor]


def _shapes(config: DenoiserConfig) -> Dict[str, tuple]:
    d = config.model_dim
    e = config.timestep_embedding_dim
    hidden = config.mlp_ratio * d
    shapes = {
        'token.w': (config.token_dim, d),
        'token.b': (d,),
        'pe.w': (config.pe_dim, d),
        'semantic.emb': (EMBEDDING_ROWS, d),
        'time.w1': (e, d),
        'time.b1': (d,),
        'time.w2': (d, d),
        'time.b2': (d,),
    }
    for layer in range(config.layer_count):
        p = 'block{}.'.format(layer)
        shapes.update(
            {
                p + 'ada.w': (d, _BLOCK_CHUNKS * d),
                p + 'ada.b': (_BLOCK_CHUNKS * d,),
                p + 'q.w': (d, d),
                p + 'k.w': (d, d),
                p + 'v.w': (d, d),
                p + 'o.w': (d, d),
                p + 'o.b': (d,),
                p + 'mlp.w1': (d, hidden),
                p + 'mlp.b1': (hidden,),
                p + 'mlp.w2': (hidden, d),
                p + 'mlp.b2': (d,),
            }
        )
    shapes.update(
        {
            'final.ada.w': (d, _FINAL_CHUNKS * d),
            'final.ada.b': (_FINAL_CHUNKS * d,),
            'out.w': (d, config.token_dim),
            'out.b': (config.token_dim,),
        }
    )
    return shapes


def init_params(
    config: DenoiserConfig, seed: int = 0, zero_init: bool = True
) -> Params:
    """
    Draw initial parameters.

    Weights are N(0, 1/fan_in), biases zero. With `zero_init` the adaLN
    projections are zero, making each block an identity map at step 0.
    """
    dtype = np.dtype(config.dtype)
    params = {}
    for number, (name, shape) in enumerate(sorted(_shapes(config).items())):
        rng = derive_rng(seed, number)
        if len(shape) == 1 or (zero_init and '.ada.' in name):
            value = np.zeros(shape)
        elif name == 'semantic.emb':
            value = rng.normal(0.0, 0.02, size=shape)
        else:
            value = rng.normal(0.0, 1.0 / np.sqrt(shape[0]), size=shape)
        params[name] = Tensor(value.astype(dtype), name=name)
    return params


def check_params(params: Mapping[str, Tensor], config: DenoiserConfig) -> None:
    """Raise unless `params` matches the architecture of `config`."""
    expected = _shapes(config)
    missing = sorted(set(expected) - set(params))
    unknown = sorted(set(params) - set(expected))
    if missing or unknown:
        raise ShapeMismatchError(
            'params (missing {}, unknown {})'.format(missing, unknown),
            (len(expected),),
            (len(params),),
        )
    for name, shape in expected.items():
        if tuple(params[name].shape) != shape:
            raise ShapeMismatchError(name, shape, params[name].shape)


def _modulate(x: Tensor, shift: Tensor, scale: Tensor) -> Tensor:
    return ops.layer_norm(x) * (scale + 1.0) + shift


def _chunks(modulation: Tensor, count: int, d: int):
    flat = ops.reshape(modulation, (count * d,))
    return [ops.slice_last(flat, k * d, (k + 1) * d) for k in range(count)]


def _attention(x: Tensor, params: Params, prefix: str, blocked, config) -> Tensor:
    n_tokens = x.shape[0]
    heads, head_dim = config.head_count, config.head_dim

    def split(w):
        h = ops.reshape(x @ params[prefix + w], (n_tokens, heads, head_dim))
        return ops.transpose(h, (1, 0, 2))

    q, k, v = split('q.w'), split('k.w'), split('v.w')
    scores = ops.scale(q @ ops.transpose(k, (0, 2, 1)), 1.0 / np.sqrt(head_dim))
    weights = ops.softmax(ops.masked_fill(scores, blocked, -np.inf), axis=-1)
    mixed = ops.transpose(weights @ v, (1, 0, 2))
    mixed = ops.reshape(mixed, (n_tokens, config.model_dim))
    return mixed @ params[prefix + 'o.w'] + params[prefix + 'o.b']


def forward(
    params: Params,
    tokens,
    t: int,
    semantics,
    centers,
    config: DenoiserConfig,
) -> Tensor:
    """
    Predict clean tokens.

    :param tokens: (N, 6n) noisy tokens, a Tensor or an array.
    :param t: Timestep.
    :param semantics: (N,) labels, NULL_LABEL selecting the null embedding.
    :param centers: (N, 3) voxel centers in meters.
    :return: (N, 6n) Tensor.
    :raises DimensionMismatchError: Tokens are not 6n wide.
    """
    dtype = np.dtype(config.dtype)
    if not isinstance(tokens, Tensor):
        tokens = Tensor(np.asarray(tokens, dtype=dtype))
    if tokens.ndim != 2 or tokens.shape[1] != config.token_dim:
        raise DimensionMismatchError(
            'tokens have shape {}, expected (N, {})'.format(
                tokens.shape, config.token_dim
            )
        )
    semantics = np.asarray(semantics, dtype=np.int64).reshape(-1)
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    n_tokens = tokens.shape[0]
    if len(semantics) != n_tokens or len(centers) != n_tokens:
        raise ShapeMismatchError('forward', (n_tokens,), (len(semantics), len(centers)))
    d = config.model_dim

    pe = Tensor(encode_positions(centers, config.pe_dim).astype(dtype))
    h = tokens @ params['token.w'] + params['token.b']
    h = h + pe @ params['pe.w']
    h = h + ops.embed_lookup(params['semantic.emb'], semantics)

    temb = timestep_embedding(float(t), config.timestep_embedding_dim)
    temb = Tensor(temb[None, :].astype(dtype))
    c = ops.silu(temb @ params['time.w1'] + params['time.b1'])
    c = ops.silu(c @ params['time.w2'] + params['time.b2'])

    blocked = ~build_attention_mask(centers, config.attention_radius)
    for layer in range(config.layer_count):
        p = 'block{}.'.format(layer)
        shift1, scale1, gate1, shift2, scale2, gate2 = _chunks(
            c @ params[p + 'ada.w'] + params[p + 'ada.b'], _BLOCK_CHUNKS, d
        )
        attended = _attention(_modulate(h, shift1, scale1), params, p, blocked, config)
        h = h + attended * gate1
        hidden = _modulate(h, shift2, scale2) @ params[p + 'mlp.w1']
        hidden = hidden + params[p + 'mlp.b1']
        hidden = ops.silu(hidden) @ params[p + 'mlp.w2'] + params[p + 'mlp.b2']
        h = h + hidden * gate2

    shift, scale = _chunks(
        c @ params['final.ada.w'] + params['final.ada.b'], _FINAL_CHUNKS, d
    )
    return _modulate(h, shift, scale) @ params['out.w'] + params['out.b']


class SigmaDenoiser:
    """
    The trained network behind the `Denoiser` protocol.

    :param params: Parameter arrays or tensors by name.
    :param config: Architecture.
    """

    def __init__(self, params: Mapping, config: DenoiserConfig):
        dtype = np.dtype(config.dtype)
        self.config = config
        self.params = {}
        for name, value in params.items():
            if isinstance(value, Tensor):
                value = value.data
            self.params[name] = Tensor(np.asarray(value, dtype=dtype), name=name)
        check_params(self.params, config)

    @property
    def token_dim(self) -> int:
        return self.config.token_dim

    def predict(self, x_t, t: int, semantics, centers) -> np.ndarray:
        out = forward(self.params, x_t, t, semantics, centers, self.config)
        return out.data.astype(np.float64)

    def arrays(self) -> Dict[str, np.ndarray]:
        """Return the parameters as plain arrays."""
        return {name: p.data for name, p in self.params.items()}

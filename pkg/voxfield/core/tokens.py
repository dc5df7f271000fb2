"""Token flattening: Sigma-Voxfield <-> normalized 6n feature vector.

Positions are scaled by 2 / voxel_size and colors mapped to 2c - 1, so every
feature of an in-range voxfield lies in [-1, 1].
"""
from typing import Sequence

import numpy as np

from voxfield.core.voxfield import SAMPLE_DTYPE, SigmaVoxfield
from voxfield.exceptions import DimensionMismatchError

FEATURES_PER_SAMPLE = 6


def token_dim(n: int) -> int:
    """Return the token length 6n."""
    return FEATURES_PER_SAMPLE * n


def flatten_token(v: SigmaVoxfield, voxel_size: float) -> np.ndarray:
    """Return [x1, y1, z1, r1, g1, b1, ...] normalized to [-1, 1]."""
    positions = v.positions.astype(np.float64) * (2.0 / voxel_size)
    colors = v.colors.astype(np.float64) * 2.0 - 1.0
    return np.concatenate([positions, colors], axis=1).reshape(-1)


def flatten_tokens(voxfields: Sequence[SigmaVoxfield], voxel_size: float) -> np.ndarray:
    """Stack flattened tokens into a (len(voxfields), 6n) matrix."""
    if len(voxfields) == 0:
        return np.zeros((0, 0))
    return np.stack([flatten_token(v, voxel_size) for v in voxfields])


def unflatten_token(t, voxel_size: float, n: int = None) -> SigmaVoxfield:
    """Invert `flatten_token`, clamping into range and re-sorting canonically.

    :param t: Token vector of length 6n.
    :param n: Expected sample count; inferred from the length when omitted.
    """
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    if n is None:
        if t.size % FEATURES_PER_SAMPLE != 0:
            raise DimensionMismatchError(
                'token length {} is not a multiple of {}'.format(
                    t.size, FEATURES_PER_SAMPLE
                )
            )
        n = t.size // FEATURES_PER_SAMPLE
    if t.size != token_dim(n):
        raise DimensionMismatchError(
            'token length {} does not match 6n = {}'.format(t.size, token_dim(n))
        )
    features = t.reshape(n, FEATURES_PER_SAMPLE)
    half = float(SAMPLE_DTYPE(voxel_size)) / 2.0
    positions = np.clip(features[:, :3] * (voxel_size / 2.0), -half, half)
    colors = np.clip((features[:, 3:] + 1.0) / 2.0, 0.0, 1.0)
    return SigmaVoxfield(positions, colors)


def unflatten_tokens(tokens: np.ndarray, voxel_size: float, n: int):
    """Decode each row of a token matrix."""
    return [unflatten_token(row, voxel_size, n) for row in np.asarray(tokens)]

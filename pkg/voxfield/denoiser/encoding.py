"""Positional and timestep encodings, and the neighborhood attention mask."""
import numpy as np

from voxfield.exceptions import ShapeMismatchError

PE_MIN_WAVELENGTH = 0.5
PE_MAX_WAVELENGTH = 256.0


def pe_wavelengths(pairs: int) -> np.ndarray:
    """Geometric wavelengths from 0.5 m to 256 m, shortest first."""
    if pairs == 1:
        return np.array([PE_MIN_WAVELENGTH])
    return PE_MIN_WAVELENGTH * (PE_MAX_WAVELENGTH / PE_MIN_WAVELENGTH) ** (
        np.arange(pairs) / (pairs - 1)
    )


def sinusoidal_pe_3d(center, pe_dim: int) -> np.ndarray:
    """
    Encode one (already centroid-relative) position.

    Per axis: pe_dim / 6 interleaved (sin, cos) pairs.

    :raises ValueError: pe_dim is not a positive multiple of 6.
    """
    center = np.asarray(center, dtype=np.float64).reshape(1, 3)
    return encode_positions(center, pe_dim, relative=False)[0]


def encode_positions(centers, pe_dim: int, relative: bool = True) -> np.ndarray:
    """
    Encode (N, 3) centers; with `relative` they are first taken relative to
    their centroid, which makes the result translation invariant.
    """
    if pe_dim <= 0 or pe_dim % 6 != 0:
        raise ValueError(
            'pe_dim must be a positive multiple of 6, got {}'.format(pe_dim)
        )
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if relative and len(centers):
        centers = centers - centers.mean(axis=0)
    omega = 2.0 * np.pi / pe_wavelengths(pe_dim // 6)
    phase = centers[:, :, None] * omega  # (N, 3, pairs)
    pairs = np.stack([np.sin(phase), np.cos(phase)], axis=-1)
    return pairs.reshape(len(centers), pe_dim)


def timestep_embedding(t: float, dim: int, max_period: float = 10000.0) -> np.ndarray:
    """Sinusoidal embedding of a diffusion timestep."""
    half = dim // 2
    freqs = np.exp(-np.log(max_period) * np.arange(half) / half)
    return np.concatenate([np.sin(t * freqs), np.cos(t * freqs)])


def build_attention_mask(centers, radius: float) -> np.ndarray:
    """Return mask[a, b] = |center_a - center_b| <= radius."""
    if radius <= 0:
        raise ValueError('radius must be > 0')
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[1] != 3:
        raise ShapeMismatchError('build_attention_mask', centers.shape, (-1, 3))
    distance = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
    return distance <= radius

"""Distribution distances between token sets."""
import logging
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from voxfield.exceptions import EmptyGeometryError, ShapeMismatchError

logger = logging.getLogger(__name__)


def median_bandwidth(points: np.ndarray) -> float:
    """Median pairwise Euclidean distance, 1.0 when all points coincide."""
    distances = cdist(points, points)
    upper = distances[np.triu_indices(len(points), k=1)]
    if upper.size == 0:
        return 1.0
    median = float(np.median(upper))
    return median if median > 0 else 1.0


def token_mmd(
    tokens_a,
    tokens_b,
    bandwidth: Optional[float] = None,
    max_tokens: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Squared maximum mean discrepancy between two token sets.

    Uses an RBF kernel exp(-d^2 / 2 sigma^2) and the biased estimator, so the
    result is >= 0 and exactly 0 for identical sets. Without `bandwidth`,
    sigma is the median pairwise distance of the pooled tokens.

    :param max_tokens: Subsample each side to at most this many rows.
    """
    a = np.asarray(tokens_a, dtype=np.float64)
    b = np.asarray(tokens_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeMismatchError('token_mmd', a.shape, b.shape)
    if len(a) == 0 or len(b) == 0:
        raise EmptyGeometryError('token_mmd needs tokens on both sides')
    if max_tokens is not None:
        rng = rng if rng is not None else np.random.default_rng(0)
        if len(a) > max_tokens:
            a = a[np.sort(rng.choice(len(a), max_tokens, replace=False))]
        if len(b) > max_tokens:
            b = b[np.sort(rng.choice(len(b), max_tokens, replace=False))]
    if bandwidth is None:
        bandwidth = median_bandwidth(np.concatenate([a, b]))
    elif bandwidth <= 0:
        raise ValueError('bandwidth must be > 0')
    gamma = 1.0 / (2.0 * bandwidth * bandwidth)

    def kernel_mean(x, y):
        return float(np.exp(-gamma * cdist(x, y, 'sqeuclidean')).mean())

    mmd = kernel_mean(a, a) + kernel_mean(b, b) - 2.0 * kernel_mean(a, b)
    logger.debug(
        'MMD over %d x %d tokens, bandwidth %.4g: %.6g', len(a), len(b), bandwidth, mmd
    )
    return max(mmd, 0.0)

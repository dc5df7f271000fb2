"""Local sets: the unit one diffusion pass works on."""
from typing import Optional

import numpy as np

from voxfield.exceptions import ShapeMismatchError
from voxfield.models import NULL_LABEL


class LocalSet:
    """
    A bounded neighborhood of voxfields with a known/target partition.

    :param indices: (N, 3) voxel indices; they key the per-token noise streams.
    :param tokens: (N, 6n) normalized tokens (values of target rows are unused).
    :param semantics: (N,) labels, NULL_LABEL allowed.
    :param centers: (N, 3) voxel centers in meters.
    :param known_mask: (N,) True for rows whose tokens are fixed.
    :param max_size: Optional cap on N.
    """

    def __init__(
        self,
        indices,
        tokens,
        semantics,
        centers,
        known_mask=None,
        max_size: Optional[int] = None,
    ):
        self.indices = np.asarray(indices, dtype=np.int64).reshape(-1, 3)
        count = len(self.indices)
        self.tokens = np.asarray(tokens, dtype=np.float64).reshape(count, -1)
        self.semantics = np.asarray(semantics, dtype=np.int64).reshape(-1)
        self.centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
        if known_mask is None:
            known_mask = np.zeros(count, dtype=bool)
        self.known_mask = np.asarray(known_mask, dtype=bool).reshape(-1)
        for name in ('semantics', 'centers', 'known_mask'):
            if len(getattr(self, name)) != count:
                raise ShapeMismatchError(
                    'LocalSet.{}'.format(name),
                    (count,),
                    getattr(self, name).shape,
                )
        if max_size is not None and count > max_size:
            raise ValueError('local set of {} exceeds {}'.format(count, max_size))

    def __len__(self):
        return len(self.indices)

    @property
    def token_dim(self) -> int:
        return self.tokens.shape[1]

    @property
    def known_count(self) -> int:
        return int(self.known_mask.sum())

    @property
    def target_count(self) -> int:
        return len(self) - self.known_count

    def unconditional(self) -> 'LocalSet':
        """Return a copy with every label replaced by NULL."""
        return LocalSet(
            self.indices,
            self.tokens,
            np.full(len(self), NULL_LABEL),
            self.centers,
            self.known_mask,
        )

    def __repr__(self):
        return 'LocalSet(size={}, known={}, dim={})'.format(
            len(self), self.known_count, self.token_dim
        )

"""Tests for `voxfield.utils.rng`."""
import numpy as np

from voxfield.utils.rng import derive_rng


def test_same_keys_same_stream():
    a = derive_rng(7, 1, -2, 3).normal(size=5)
    b = derive_rng(7, 1, -2, 3).normal(size=5)
    assert np.array_equal(a, b)


def test_keys_separate_streams():
    draws = {
        keys: derive_rng(7, *keys).integers(0, 2**62)
        for keys in [(), (0,), (1,), (-1,), (0, 0), (1, -2, 3), (1, 2, 3)]
    }
    assert len(set(draws.values())) == len(draws)
    assert derive_rng(8, 1).integers(0, 2**62) != draws[(1,)]

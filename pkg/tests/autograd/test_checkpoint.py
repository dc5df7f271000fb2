"""Tests for `voxfield.autograd.checkpoint`."""
import struct

import numpy as np
import pytest

from voxfield.autograd.checkpoint import (
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from voxfield.exceptions import CheckpointFormatError


@pytest.fixture
def params():
    rng = np.random.default_rng(0)
    return {
        'block0.q.w': rng.normal(size=(4, 4)).astype(np.float32),
        'token.b': np.arange(3, dtype=np.float32),
        'scalar': np.array(2.5, dtype=np.float32),
    }


def test_layout_of_single_entry():
    data = encode_checkpoint({'a': np.array([1.0], dtype=np.float32)})
    assert data[:4] == b'VXCK'
    assert struct.unpack_from('<IIc', data, 4) == (1, 1, b'a')
    assert struct.unpack_from('<II', data, 13) == (1, 1)
    assert struct.unpack_from('<f', data, 21) == (1.0,)
    assert len(data) == 25


def test_save_and_load(tmp_path, params):
    path = tmp_path / 'nested' / 'model.vxck'
    config = {'denoiser': {'n': 2}, 'schedule': {'T': 10}}
    save_checkpoint(str(path), params, config)
    loaded, loaded_config = load_checkpoint(str(path))
    assert loaded_config == config
    assert sorted(loaded) == sorted(params)
    for name, value in params.items():
        assert loaded[name].dtype == np.float32
        assert np.array_equal(loaded[name], value)


def test_without_config(params):
    _, config = decode_checkpoint(encode_checkpoint(params))
    assert config is None


def test_float64_is_stored_as_float32():
    loaded, _ = decode_checkpoint(encode_checkpoint({'x': np.array([0.1])}))
    assert loaded['x'][0] == np.float32(0.1)


def test_encoding_is_deterministic(params):
    shuffled = dict(reversed(list(params.items())))
    assert encode_checkpoint(params) == encode_checkpoint(shuffled)


def test_bad_magic(params):
    data = b'XXXX' + encode_checkpoint(params)[4:]
    with pytest.raises(CheckpointFormatError, match='magic'):
        decode_checkpoint(data)


@pytest.mark.parametrize('cut', [6, 12, 30, -1])
def test_truncated(params, cut):
    data = encode_checkpoint(params)
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(data[:cut])


def test_trailing_bytes(params):
    with pytest.raises(CheckpointFormatError, match='trailing'):
        decode_checkpoint(encode_checkpoint(params) + b'\0')


def test_duplicate_entry():
    one = encode_checkpoint({'a': np.zeros(1)})
    entry = one[8:]
    data = b'VXCK' + struct.pack('<I', 2) + entry + entry
    with pytest.raises(CheckpointFormatError, match='duplicate'):
        decode_checkpoint(data)

"""
VXCK parameter checkpoints.

Layout (little-endian): magic "VXCK", u32 entry count, then per entry u32 name
length, UTF-8 name, u32 rank, rank x u32 dims and float32 data. The network
config travels as one extra zero-sized entry named `__config__<json>`.
"""
import json
import logging
import struct
from typing import Dict, Optional, Tuple

import numpy as np

from voxfield.exceptions import CheckpointFormatError
from voxfield.utils.paths import make_sure_parent_exists

logger = logging.getLogger(__name__)

MAGIC = b'VXCK'
CONFIG_PREFIX = '__config__'
_U32 = struct.Struct('<I')


def encode_checkpoint(
    params: Dict[str, np.ndarray], config: Optional[dict] = None
) -> bytes:
    """Serialize named arrays (and an optional JSON-able config)."""
    entries = [(name, np.asarray(value)) for name, value in sorted(params.items())]
    if config is not None:
        name = CONFIG_PREFIX + json.dumps(config, sort_keys=True)
        entries.append((name, np.zeros(0)))
    parts = [MAGIC, _U32.pack(len(entries))]
    for name, value in entries:
        encoded = name.encode('utf-8')
        parts.append(_U32.pack(len(encoded)))
        parts.append(encoded)
        parts.append(_U32.pack(value.ndim))
        parts.extend(_U32.pack(d) for d in value.shape)
        parts.append(np.ascontiguousarray(value, dtype='<f4').tobytes())
    return b''.join(parts)


def _read_u32(data, offset, what):
    if offset + 4 > len(data):
        raise CheckpointFormatError(
            'truncated checkpoint reading {} at byte {}'.format(what, offset)
        )
    return _U32.unpack_from(data, offset)[0], offset + 4


def decode_checkpoint(data: bytes) -> Tuple[Dict[str, np.ndarray], Optional[dict]]:
    """Parse VXCK bytes into (params, config)."""
    if data[:4] != MAGIC:
        raise CheckpointFormatError(
            'bad magic {!r}, expected "VXCK"'.format(bytes(data[:4]))
        )
    count, offset = _read_u32(data, 4, 'entry count')
    params, config = {}, None
    for _ in range(count):
        length, offset = _read_u32(data, offset, 'name length')
        if offset + length > len(data):
            raise CheckpointFormatError('truncated name at byte {}'.format(offset))
        try:
            name = data[offset:offset + length].decode('utf-8')
        except UnicodeDecodeError:
            raise CheckpointFormatError('name at byte {} is not UTF-8'.format(offset))
        offset += length
        rank, offset = _read_u32(data, offset, 'rank')
        shape = []
        for _ in range(rank):
            dim, offset = _read_u32(data, offset, 'shape')
            shape.append(dim)
        size = int(np.prod(shape)) * 4
        if offset + size > len(data):
            raise CheckpointFormatError('truncated data of {!r}'.format(name))
        value = np.frombuffer(data, dtype='<f4', count=size // 4, offset=offset)
        offset += size
        if name.startswith(CONFIG_PREFIX):
            try:
                config = json.loads(name[len(CONFIG_PREFIX):])
            except ValueError as e:
                raise CheckpointFormatError('unreadable config entry: {}'.format(e))
            continue
        if name in params:
            raise CheckpointFormatError('duplicate parameter {!r}'.format(name))
        params[name] = value.reshape(shape).astype(np.float32)
    if offset != len(data):
        raise CheckpointFormatError(
            '{} trailing bytes after last entry'.format(len(data) - offset)
        )
    return params, config


def save_checkpoint(path, params: Dict[str, np.ndarray], config: Optional[dict] = None):
    """Write a VXCK file."""
    make_sure_parent_exists(path)
    data = encode_checkpoint(params, config)
    with open(path, 'wb') as f:
        f.write(data)
    logger.debug('Saved %d parameters (%d bytes) to %s', len(params), len(data), path)


def load_checkpoint(path) -> Tuple[Dict[str, np.ndarray], Optional[dict]]:
    """Read a VXCK file."""
    with open(path, 'rb') as f:
        return decode_checkpoint(f.read())

"""VXF binary grid format.

Little-endian layout::

    header (32 bytes)
        magic        4s   b"VXF1"
        voxel_size   f32
        n            u32
        origin       3 x f32
        voxel_count  u64
    record (13 + 24 n bytes), sorted by (i, j, k)
        i, j, k      3 x i32
        class_id     u8   (255 = NULL)
        samples      n x (3 x f32 position, 3 x f32 color)
"""
import logging
import struct

import numpy as np

from voxfield.core.grid import VoxfieldGrid
from voxfield.core.voxfield import SigmaVoxfield
from voxfield.exceptions import GridFormatError
from voxfield.models import NULL_LABEL, NULL_LABEL_ON_DISK, is_valid_label
from voxfield.utils.paths import make_sure_parent_exists

logger = logging.getLogger(__name__)

MAGIC = b'VXF1'
HEADER = struct.Struct('<4sfI3fQ')
HEADER_SIZE = HEADER.size  # 32


def record_dtype(n: int) -> np.dtype:
    """Return the packed numpy dtype of one voxel record."""
    return np.dtype(
        [('index', '<i4', (3,)), ('label', 'u1'), ('samples', '<f4', (n, 6))]
    )


def encode_grid(g: VoxfieldGrid) -> bytes:
    """Serialize a grid to VXF bytes."""
    header = HEADER.pack(MAGIC, g.voxel_size, g.n, *g.origin.tolist(), len(g))
    records = np.zeros(len(g), dtype=record_dtype(g.n))
    for row, (index, (voxfield, label)) in enumerate(g.items()):
        records['index'][row] = index
        records['label'][row] = NULL_LABEL_ON_DISK if label == NULL_LABEL else label
        if g.n:
            records['samples'][row] = np.concatenate(
                [voxfield.positions, voxfield.colors], axis=1
            )
    return header + records.tobytes()


def write_grid(g: VoxfieldGrid, path) -> None:
    """Write a grid to a VXF file."""
    make_sure_parent_exists(path)
    data = encode_grid(g)
    with open(path, 'wb') as f:
        f.write(data)
    logger.debug('Wrote %d voxels (%d bytes) to %s', len(g), len(data), path)


def decode_grid(data: bytes) -> VoxfieldGrid:
    """Parse VXF bytes, validating every grid invariant."""
    if len(data) < HEADER_SIZE:
        raise GridFormatError(
            'truncated header: {} of {} bytes'.format(len(data), HEADER_SIZE),
            offset=len(data),
        )
    magic, voxel_size, n, ox, oy, oz, count = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise GridFormatError(
            'bad magic {!r}, expected "VXF1"'.format(magic), offset=0
        )
    if not np.isfinite(voxel_size) or voxel_size <= 0:
        raise GridFormatError('invalid voxel_size {}'.format(voxel_size), offset=4)
    if not all(np.isfinite([ox, oy, oz])):
        raise GridFormatError('non-finite origin', offset=12)

    dtype = record_dtype(n)
    expected = HEADER_SIZE + count * dtype.itemsize
    if len(data) < expected:
        complete = (len(data) - HEADER_SIZE) // dtype.itemsize
        raise GridFormatError(
            'truncated file: {} of {} voxel records present'.format(complete, count),
            offset=HEADER_SIZE + complete * dtype.itemsize,
        )
    if len(data) > expected:
        raise GridFormatError(
            '{} trailing bytes after last record'.format(len(data) - expected),
            offset=expected,
        )

    if count == 0:
        return VoxfieldGrid(voxel_size, n, (ox, oy, oz))
    records = np.frombuffer(data, dtype=dtype, count=count, offset=HEADER_SIZE)
    half = np.float32(voxel_size) / np.float32(2)
    entries = {}
    for row, record in enumerate(records):
        offset = HEADER_SIZE + row * dtype.itemsize
        index = tuple(int(i) for i in record['index'])
        if index in entries:
            raise GridFormatError('duplicate voxel {}'.format(index), offset=offset)
        label = int(record['label'])
        label = NULL_LABEL if label == NULL_LABEL_ON_DISK else label
        if not is_valid_label(label):
            raise GridFormatError(
                'voxel {} has invalid class id {}'.format(index, label),
                offset=offset + 12,
            )
        samples = np.asarray(record['samples'], dtype=np.float32).reshape(n, 6)
        positions, colors = samples[:, :3], samples[:, 3:]
        if not np.all(np.isfinite(samples)):
            raise GridFormatError(
                'voxel {} holds non-finite values'.format(index), offset=offset + 13
            )
        if np.any(np.abs(positions) > half) or np.any(colors < 0) or np.any(colors > 1):
            raise GridFormatError(
                'voxel {} holds samples out of range'.format(index),
                offset=offset + 13,
            )
        voxfield = SigmaVoxfield(positions, colors, ordered=True)
        if not voxfield.is_canonical():
            raise GridFormatError(
                'voxel {} samples are not canonically ordered'.format(index),
                offset=offset + 13,
            )
        entries[index] = (voxfield, label)
    return VoxfieldGrid(voxel_size, n, (ox, oy, oz), entries)


def read_grid(path) -> VoxfieldGrid:
    """Read a VXF file."""
    with open(path, 'rb') as f:
        data = f.read()
    grid = decode_grid(data)
    logger.debug('Read %d voxels from %s', len(grid), path)
    return grid

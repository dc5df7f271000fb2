"""Binary PPM (P6) and PGM (P5) images, maxval 255."""
import logging
import os
from typing import Optional

import numpy as np

from voxfield.exceptions import ImageFormatError
from voxfield.utils.paths import make_sure_parent_exists

logger = logging.getLogger(__name__)

FORMATS = {'ppm': b'P6', 'pgm': b'P5'}


def to_bytes(img) -> np.ndarray:
    """Quantize an image to uint8: bools map to 0/255, floats in [0, 1] round."""
    img = np.asarray(img)
    if img.dtype == np.uint8:
        return img
    if img.dtype == bool:
        return np.where(img, 255, 0).astype(np.uint8)
    return np.round(np.clip(img.astype(np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def _guess_format(img: np.ndarray, path) -> str:
    ext = os.path.splitext(str(path))[1].lower().lstrip('.')
    if ext in FORMATS:
        return ext
    return 'ppm' if img.ndim == 3 else 'pgm'


def encode_image(img, format: str) -> bytes:
    """Encode an (H, W, 3) image as P6 or an (H, W) image as P5."""
    if format not in FORMATS:
        raise ImageFormatError(
            'unsupported image format {!r}, use one of {}'.format(
                format, ', '.join(sorted(FORMATS))
            )
        )
    data = to_bytes(img)
    if format == 'ppm' and (data.ndim != 3 or data.shape[2] != 3):
        raise ImageFormatError(
            'ppm needs an (H, W, 3) image, got {}'.format(data.shape)
        )
    if format == 'pgm' and data.ndim != 2:
        raise ImageFormatError('pgm needs an (H, W) image, got {}'.format(data.shape))
    height, width = data.shape[:2]
    header = b'%s\n%d %d\n255\n' % (FORMATS[format], width, height)
    return header + np.ascontiguousarray(data).tobytes()


def write_image(img, path, format: Optional[str] = None) -> None:
    """
    Write an image to `path`.

    :param img: (H, W, 3) color or (H, W) gray / mask image.
    :param format: 'ppm' or 'pgm'; guessed from the extension when omitted.
    """
    img = np.asarray(img)
    payload = encode_image(img, format or _guess_format(img, path))
    make_sure_parent_exists(path)
    with open(path, 'wb') as f:
        f.write(payload)
    logger.debug('Wrote %s (%d bytes)', path, len(payload))


def _header_tokens(data: bytes, count: int):
    """Read `count` whitespace separated header tokens, skipping # comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ImageFormatError('truncated image header')
        if data[pos : pos + 1] == b'#':
            end = data.find(b'\n', pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # A single whitespace byte separates the header from the raster.
    return tokens, pos + 1


def decode_image(data: bytes) -> np.ndarray:
    """Decode P6 to (H, W, 3) uint8 or P5 to (H, W) uint8."""
    tokens, offset = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in FORMATS.values():
        raise ImageFormatError('unsupported image magic {!r}'.format(magic))
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageFormatError('malformed image header {!r}'.format(tokens[1:]))
    if maxval != 255:
        raise ImageFormatError('only maxval 255 is supported, got {}'.format(maxval))
    channels = 3 if magic == b'P6' else 1
    expected = width * height * channels
    raster = data[offset:]
    if len(raster) != expected:
        raise ImageFormatError(
            'expected {} raster bytes, got {}'.format(expected, len(raster))
        )
    img = np.frombuffer(raster, dtype=np.uint8)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return img.reshape(shape).copy()


def read_image(path) -> np.ndarray:
    with open(path, 'rb') as f:
        return decode_image(f.read())

"""Generic reader for key=value, json and yaml config files."""
import json
import os
import logging
from collections import OrderedDict
from typing import Dict, List, Tuple

import yaml

from voxfield.exceptions import ConfigError

logger = logging.getLogger(__name__)

KEY_VALUE_EXTENSIONS = ('', 'cfg', 'conf', 'txt', 'ini', 'cam', 'traj')


def parse_key_value_lines(lines, source='<string>', first_line=1):
    """Parse `key = value` lines into an ordered dict plus a key -> line map.

    Blank lines and `#` comments are skipped. Duplicate keys and lines without
    an `=` raise ConfigError with the line number.
    """
    values = OrderedDict()
    line_map = {}
    for number, raw in enumerate(lines, start=first_line):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(
                "expected 'key = value' in {}, got '{}'".format(source, line),
                line=number,
            )
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError('empty key in {}'.format(source), line=number)
        if key in values:
            raise ConfigError(
                'duplicate key in {}'.format(source), key=key, line=number
            )
        values[key] = value
        line_map[key] = number
    return values, line_map


def read_key_value_blocks(file) -> List[Tuple[Dict[str, str], Dict[str, int]]]:
    """Read a file of `key = value` blocks separated by blank lines."""
    if not os.path.exists(file):
        raise FileNotFoundError(f"Can't find the file {file}.")
    with open(file, encoding='utf-8') as f:
        lines = f.read().splitlines()

    blocks = []
    start = None
    for index, raw in enumerate(lines + ['']):
        stripped = raw.split('#', 1)[0].strip()
        if stripped and start is None:
            start = index
        elif not stripped and start is not None and not raw.strip().startswith('#'):
            blocks.append(
                parse_key_value_lines(lines[start:index], file, first_line=start + 1)
            )
            start = None
    return blocks


def read_config_file(file, file_extension=None, with_lines=False):
    """Read config files into dicts.

    With `with_lines` a `(values, line_map)` tuple is returned; the line map is
    empty for json and yaml files.
    """
    if file_extension is None:
        file_extension = os.path.splitext(file)[1].lstrip('.').lower()

    if not os.path.exists(file):
        raise FileNotFoundError(f"Can't find the file {file}.")

    logger.debug(
        'Using "%s" as config file and "%s" as file extension', file, file_extension
    )
    line_map = {}
    try:
        if file_extension == 'json':
            with open(file) as f:
                config = json.load(f, object_pairs_hook=OrderedDict)
        elif file_extension in ('yaml', 'yml'):
            with open(file, encoding='utf-8') as f:
                config = yaml.safe_load(f) or {}
        elif file_extension in KEY_VALUE_EXTENSIONS:
            with open(file, encoding='utf-8') as f:
                config, line_map = parse_key_value_lines(f.read().splitlines(), file)
        else:
            raise ConfigError(
                'Unable to parse file {}. Unsupported extension '
                '(key=value/json/yaml only)'.format(file)
            )
    except (ValueError, yaml.YAMLError) as e:
        raise ConfigError(
            'decoding error while loading "{0}": {1}'.format(file, str(e))
        )

    if not isinstance(config, dict):
        raise ConfigError('config file {} must hold a mapping'.format(file))
    if with_lines:
        return config, line_map
    return config

"""Run configuration initializer."""
import os
import logging
from typing import Dict, Optional, Type, TypeVar

from pydantic import ValidationError

from voxfield.exceptions import ConfigError
from voxfield.models import RunModel, Settings
from voxfield.utils.paths import expand_path
from voxfield.utils.reader import read_config_file

logger = logging.getLogger(__name__)

ModelT = TypeVar('ModelT', bound=RunModel)


def get_settings(**values) -> Settings:
    """Return process settings from `VOXFIELD_*` env vars and explicit values."""
    return Settings(**{k: v for k, v in values.items() if v is not None})


def _raise_config_error(error: ValidationError, line_map: Dict[str, int]):
    first = error.errors()[0]
    location = first.get('loc') or ()
    key = str(location[0]) if location else None
    if first.get('type') == 'extra_forbidden':
        message = 'unknown key'
    else:
        message = first.get('msg', str(error))
    raise ConfigError(message, key=key, line=line_map.get(key)) from error


def get_run_config(
    model: Type[ModelT],
    config_file: Optional[str] = None,
    overrides: Optional[Dict[str, str]] = None,
    seed: Optional[int] = None,
    defaults: Optional[Dict[str, object]] = None,
) -> ModelT:
    """
    Return a validated run config.

    Values are merged in order: model defaults, ``defaults`` (for keys the
    model has), ``config_file``, ``overrides`` (from ``--set key=value``) and
    finally ``seed``, written to the model's seed field. Unknown keys and
    unparsable values raise ConfigError naming the key and, for file values,
    its line.
    """
    values = {k: v for k, v in (defaults or {}).items() if k in model.model_fields}
    line_map = {}
    if config_file:
        config_file = expand_path(config_file)
        if not os.path.isfile(config_file):
            raise ConfigError('config file {} does not exist'.format(config_file))
        logger.debug('Loading run config from %s.', config_file)
        file_values, line_map = read_config_file(config_file, with_lines=True)
        values.update(file_values)
    if overrides:
        for key in overrides:
            line_map.pop(key, None)
        values.update(overrides)
    if seed is not None:
        line_map.pop(model.seed_field, None)
        values[model.seed_field] = seed

    try:
        return model(**values)
    except ValidationError as e:
        _raise_config_error(e, line_map)

"""Logging setup for the `voxfield` logger tree."""
import logging
import sys

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')

# Worker threads log too, so the verbose format names the thread.
DEBUG_FORMAT = '%(levelname)s %(name)s [%(threadName)s]: %(message)s'
STREAM_FORMAT = '%(levelname)s: %(message)s'


def normalize_level(level: str) -> str:
    """Upper-case a level name, rejecting anything `logging` does not know."""
    name = str(level).strip().upper()
    if name not in LOG_LEVELS:
        raise ValueError(
            'log level must be one of {}, got {!r}'.format(', '.join(LOG_LEVELS), level)
        )
    return name


def configure_logger(stream_level='INFO', debug_file=None):
    """Configure the `voxfield` logger.

    Records at ``stream_level`` and above go to stdout, in the verbose format
    when the level is DEBUG. If ``debug_file`` is given everything is also
    written there in the verbose format. Calling this again replaces the
    handlers, so tests and repeated CLI invocations start clean.
    """
    stream_level = normalize_level(stream_level)
    logger = logging.getLogger('voxfield')
    logger.setLevel(logging.DEBUG)
    logger.propagate = True
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()

    if debug_file is not None:
        file_handler = logging.FileHandler(debug_file)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(DEBUG_FORMAT))
        logger.addHandler(file_handler)

    stream_handler = logging.StreamHandler(stream=sys.stdout)
    stream_handler.setLevel(getattr(logging, stream_level))
    stream_handler.setFormatter(
        logging.Formatter(DEBUG_FORMAT if stream_level == 'DEBUG' else STREAM_FORMAT)
    )
    logger.addHandler(stream_handler)
    return logger

"""Path related utils."""
import os
import logging

logger = logging.getLogger(__name__)


def make_sure_path_exists(path) -> str:
    """Ensure that a directory exists.

    :param path: A directory path.
    :raises OSError: The directory cannot be created (reported as a data error).
    """
    if not os.path.isdir(path):
        os.makedirs(path, exist_ok=True)
        logger.debug('Created directory at: %s', path)
    return path


def make_sure_parent_exists(file_path) -> str:
    """Ensure the directory holding `file_path` exists."""
    return make_sure_path_exists(os.path.dirname(os.path.abspath(file_path)))


def expand_path(path: str) -> str:
    """Expand both environment variables and user home in the given path."""
    return os.path.expanduser(os.path.expandvars(path))


def sidecar_path(path: str, suffix: str) -> str:
    """Return `path` with its extension replaced by `suffix` (e.g. '.sem')."""
    root, _ = os.path.splitext(path)
    return root + suffix

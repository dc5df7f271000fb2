"""All exceptions used in the voxfield code base are defined here."""
EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3
EXIT_NUMERIC_ERROR = 4


class VoxfieldException(Exception):
    """
    Base exception class.

    All voxfield-specific exceptions should subclass this class. The CLI exits
    with `exit_code` when one of them escapes a command.
    """

    exit_code = 1


class ConfigError(VoxfieldException):
    """
    Exception for invalid run configuration.

    Raised when a config file or a `--set` override holds an unknown key or a
    value that can not be parsed.
    """

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, message, key=None, line=None):
        """Exception for invalid configuration."""
        super().__init__(message)
        self.message = message
        self.key = key
        self.line = line

    def __str__(self):
        """Text representation of ConfigError."""
        where = ''
        if self.key is not None:
            where += " key '{}'".format(self.key)
        if self.line is not None:
            where += ' (line {})'.format(self.line)
        if where:
            return 'Config error at{}: {}'.format(where, self.message)
        return 'Config error: {}'.format(self.message)


class DataError(VoxfieldException):
    """Exception for unreadable or inconsistent input data."""

    exit_code = EXIT_DATA_ERROR


class GridFormatError(DataError):
    """
    Exception for malformed VXF grid files.

    Raised on bad magic, truncated files or records violating the grid
    invariants. Carries the byte offset where reading failed.
    """

    def __init__(self, message, offset=None):
        """Exception for malformed VXF grid files."""
        super().__init__(message)
        self.message = message
        self.offset = offset

    def __str__(self):
        """Text representation of GridFormatError."""
        if self.offset is None:
            return self.message
        return '{} (at byte offset {})'.format(self.message, self.offset)


class MeshParseError(DataError):
    """
    Exception for OBJ parsing failures.

    Raised with the 1-based line number of the offending line.
    """

    def __init__(self, message, line=None):
        """Exception for OBJ parsing failures."""
        super().__init__(message)
        self.message = message
        self.line = line

    def __str__(self):
        """Text representation of MeshParseError."""
        if self.line is None:
            return self.message
        return 'line {}: {}'.format(self.line, self.message)


class MeshIndexError(DataError):
    """Exception for triangle indices referring to missing vertices."""


class SidecarMismatchError(DataError):
    """
    Exception for `.sem` sidecars that do not match the mesh.

    Raised when the number of labels differs from the face count or a label is
    outside the taxonomy.
    """


class CheckpointFormatError(DataError):
    """Exception for malformed VXCK checkpoint files."""


class CameraFormatError(DataError):
    """Exception for malformed camera or trajectory files."""


class ImageFormatError(DataError):
    """Exception for unsupported image formats or malformed PPM/PGM files."""


class EmptyGeometryError(DataError):
    """
    Exception for empty inputs.

    Raised when a metric or renderer needs at least one voxel, triangle or
    pixel and got none.
    """


class EmptyBatchError(DataError):
    """Exception for training on an empty batch or an empty corpus."""


class NumericError(VoxfieldException):
    """Exception for numeric failures and shape contract violations."""

    exit_code = EXIT_NUMERIC_ERROR


class ShapeMismatchError(NumericError):
    """
    Exception for incompatible tensor shapes.

    The message names both shapes.
    """

    def __init__(self, op, shape_a, shape_b):
        """Exception for incompatible tensor shapes."""
        self.op = op
        self.shape_a = tuple(shape_a)
        self.shape_b = tuple(shape_b)
        super().__init__(
            '{}: incompatible shapes {} and {}'.format(op, self.shape_a, self.shape_b)
        )


class DimensionMismatchError(NumericError):
    """Exception for token vectors whose length is not 6n."""


class NonScalarLossError(NumericError):
    """Exception for calling backward on a loss that is not a scalar."""


class ScheduleError(NumericError):
    """Exception for invalid noise schedule parameters."""


class TimestepRangeError(NumericError):
    """Exception for timesteps outside the schedule."""


class InternalInconsistencyError(NumericError):
    """
    Exception for broken internal invariants.

    Raised e.g. when a voxel reported as occupied has zero clipped area.
    """


class NonFiniteLossError(NumericError):
    """Exception for training losses that became NaN or infinite."""

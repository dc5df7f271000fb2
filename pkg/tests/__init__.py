"""voxfield test suite."""

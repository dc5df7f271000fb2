"""Main package for voxfield."""
__version__ = "0.1.0"

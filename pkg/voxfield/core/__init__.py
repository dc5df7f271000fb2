"""Sigma-Voxfield scene representation: types, tokens and the VXF format."""
from voxfield.core.voxfield import SigmaVoxfield, SurfaceSample, canonical_order
from voxfield.core.grid import VoxfieldGrid
from voxfield.core.tokens import flatten_token, unflatten_token
from voxfield.core.grid_io import read_grid, write_grid

__all__ = [
    'SigmaVoxfield',
    'SurfaceSample',
    'VoxfieldGrid',
    'canonical_order',
    'flatten_token',
    'unflatten_token',
    'read_grid',
    'write_grid',
]

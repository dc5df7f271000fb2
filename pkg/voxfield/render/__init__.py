"""Surfel splats from grids, and a pinhole software rasterizer."""

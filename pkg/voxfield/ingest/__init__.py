"""Mesh loading, procedural scenes, voxelization and geometric fidelity."""

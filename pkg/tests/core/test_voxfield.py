"""Tests for `voxfield.core.voxfield`."""
import numpy as np
import pytest

from voxfield.core.voxfield import SigmaVoxfield, SurfaceSample, canonical_order


def sample(x, y, z, c=0.5):
    return SurfaceSample((x, y, z), (c, c, c))


def test_canonical_order_by_distance():
    """Closer samples come first."""
    ordered = canonical_order([sample(0.2, 0, 0), sample(0.1, 0, 0)])
    assert [s.position for s in ordered] == [(0.1, 0, 0), (0.2, 0, 0)]


def test_canonical_order_tie_is_lexicographic():
    """Equal norms fall back to (x, y, z)."""
    ordered = canonical_order([sample(0.1, 0, 0), sample(0, 0.1, 0)])
    assert ordered[0].position == (0, 0.1, 0)


def test_canonical_order_color_tie():
    """Identical positions fall back to (r, g, b)."""
    ordered = canonical_order([sample(0.1, 0, 0, 0.9), sample(0.1, 0, 0, 0.2)])
    assert [s.color[0] for s in ordered] == [0.2, 0.9]


def test_canonical_order_empty():
    assert canonical_order([]) == []


@pytest.mark.parametrize('seed', range(5))
def test_canonical_order_permutation_invariant(seed):
    """Any permutation of the input gives the same output."""
    rng = np.random.default_rng(seed)
    samples = [
        SurfaceSample(tuple(rng.uniform(-0.3, 0.3, 3)), tuple(rng.uniform(0, 1, 3)))
        for _ in range(20)
    ]
    shuffled = [samples[i] for i in rng.permutation(len(samples))]
    assert canonical_order(samples) == canonical_order(shuffled)
    assert canonical_order(canonical_order(samples)) == canonical_order(samples)


def test_voxfield_is_canonical_and_immutable():
    rng = np.random.default_rng(1)
    v = SigmaVoxfield(rng.uniform(-0.3, 0.3, (8, 3)), rng.uniform(0, 1, (8, 3)))
    assert v.n == 8
    assert v.is_canonical()
    assert v.in_bounds(0.6)
    with pytest.raises(AttributeError):
        v.positions = None
    with pytest.raises(ValueError):
        v.positions[0, 0] = 1.0


def test_voxfield_shape_mismatch():
    with pytest.raises(ValueError):
        SigmaVoxfield(np.zeros((2, 3)), np.zeros((3, 3)))


def test_voxfield_equality_ignores_input_order():
    rng = np.random.default_rng(2)
    positions = rng.uniform(-0.3, 0.3, (5, 3))
    colors = rng.uniform(0, 1, (5, 3))
    order = rng.permutation(5)
    assert SigmaVoxfield(positions, colors) == SigmaVoxfield(
        positions[order], colors[order]
    )


def test_canonical_order_agrees_with_stored_order():
    """A gap below float32 resolution is a tie, settled by color."""
    far = SurfaceSample((0.1 + 1e-12, 0.0, 0.0), (0.0, 0.0, 0.0))
    near = SurfaceSample((0.1, 0.0, 0.0), (1.0, 1.0, 1.0))
    ordered = canonical_order([near, far])
    assert ordered == [far, near]
    v = SigmaVoxfield([near.position, far.position], [near.color, far.color])
    assert v.colors.tolist() == [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]

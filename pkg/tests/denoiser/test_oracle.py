"""Tests for `voxfield.denoiser.oracle`."""
import numpy as np
import pytest

from voxfield.denoiser.oracle import (
    OracleClassGaussianDenoiser,
    OracleJointGaussianDenoiser,
    oracle_gaussian_denoiser,
)
from voxfield.diffusion.schedule import make_schedule
from voxfield.exceptions import ShapeMismatchError
from voxfield.models import NULL_LABEL


@pytest.fixture
def schedule():
    return make_schedule(2, 0.5, 0.5)


def test_posterior_mean_formula(schedule):
    """abar = 0.25, x_t = 1, N(0, 1) source: E[x0 | x_t] = 0.5."""
    assert oracle_gaussian_denoiser(1.0, 2, schedule, 0.0, 1.0) == pytest.approx(0.5)


def test_prior_mean_at_zero_signal(schedule):
    out = oracle_gaussian_denoiser(np.zeros(3), 2, schedule, 0.7, 1e-12)
    assert np.allclose(out, 0.7)


def test_class_means(schedule):
    oracle = OracleClassGaussianDenoiser(
        schedule, {0: [1.0, 1.0], 3: [-1.0, 0.0]}, sigma2=1e-12
    )
    assert oracle.token_dim == 2
    out = oracle.predict(np.zeros((3, 2)), 1, [3, 0, NULL_LABEL], None)
    assert np.allclose(out, [[-1, 0], [1, 1], [0, 0.5]])


def test_class_means_need_one_shape(schedule):
    with pytest.raises(ValueError):
        OracleClassGaussianDenoiser(schedule, {0: [1.0], 1: [1.0, 2.0]})


def test_joint_oracle_matches_independent_case(schedule):
    joint = OracleJointGaussianDenoiser(schedule, [0.0, 0.0], np.eye(2), token_dim=3)
    x_t = np.arange(6.0).reshape(2, 3)
    expected = oracle_gaussian_denoiser(x_t, 2, schedule, 0.0, 1.0)
    assert np.allclose(joint.predict(x_t, 2, None, None), expected)


def test_joint_oracle_shapes(schedule):
    with pytest.raises(ShapeMismatchError):
        OracleJointGaussianDenoiser(schedule, [0.0, 0.0], np.eye(3), token_dim=1)
    joint = OracleJointGaussianDenoiser(schedule, [0.0, 0.0], np.eye(2), token_dim=1)
    with pytest.raises(ShapeMismatchError):
        joint.predict(np.zeros((3, 1)), 1, None, None)

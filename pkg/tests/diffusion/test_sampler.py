"""Tests for `voxfield.diffusion.sampler`."""
import numpy as np
import pytest

from voxfield.denoiser.oracle import (
    OracleClassGaussianDenoiser,
    OracleGaussianDenoiser,
    OracleJointGaussianDenoiser,
)
from voxfield.diffusion.localset import LocalSet
from voxfield.diffusion.sampler import (
    TokenStreams,
    guided_prediction,
    repaint_sample,
    sample,
)
from voxfield.diffusion.schedule import make_schedule
from voxfield.exceptions import ShapeMismatchError
from voxfield.models import NULL_LABEL, ScheduleConfig


class CountingDenoiser:
    """Predicts zeros and records the labels of every call."""

    def __init__(self, token_dim):
        self.token_dim = token_dim
        self.calls = []

    def predict(self, x_t, t, semantics, centers):
        self.calls.append(np.asarray(semantics).copy())
        return np.zeros_like(x_t)


@pytest.fixture(scope='module')
def schedule():
    return ScheduleConfig(T=20).build()


@pytest.fixture
def class_oracle(schedule):
    means = {0: np.full(6, 0.5), 1: np.full(6, -0.3)}
    return OracleClassGaussianDenoiser(schedule, means, sigma2=0.01)


def local_set(count, dim, known=None, seed=0):
    rng = np.random.default_rng(seed)
    return LocalSet(
        np.stack([np.arange(count), np.arange(count) % 3, np.zeros(count)], axis=1),
        rng.uniform(-1, 1, (count, dim)),
        np.arange(count) % 2,
        rng.uniform(0, 3, (count, 3)),
        known,
    )


def test_token_streams_depend_only_on_key():
    a = TokenStreams(7, [(0, 0, 0), (1, 2, 3)])
    b = TokenStreams(7, [(1, 2, 3)])
    assert np.array_equal(a.initial(4)[1], b.initial(4)[0])
    assert np.array_equal(a.step(4)[2][1], b.step(4)[2][0])


def test_token_streams_differ_by_stage():
    a = TokenStreams(7, [(0, 0, 0)], stage=0).initial(4)
    b = TokenStreams(7, [(0, 0, 0)], stage=1).initial(4)
    assert not np.array_equal(a, b)


def test_guidance_scale_one_skips_null_pass():
    denoiser = CountingDenoiser(2)
    guided_prediction(denoiser, np.zeros((3, 2)), 5, [0, 1, 2], np.zeros((3, 3)), 1.0)
    assert len(denoiser.calls) == 1


def test_guidance_uses_null_labels():
    denoiser = CountingDenoiser(2)
    guided_prediction(denoiser, np.zeros((3, 2)), 5, [0, 1, 2], np.zeros((3, 3)), 4.0)
    assert len(denoiser.calls) == 2
    assert np.all(denoiser.calls[1] == NULL_LABEL)


def test_oracle_chain_recovers_source():
    """The reverse chain with the exact posterior mean returns N(0, 1)."""
    s = make_schedule(100, 1e-4, 0.02)
    tokens, dim = 100, 100
    oracle = OracleGaussianDenoiser(s, dim)
    out = sample(oracle, np.zeros(tokens), np.zeros((tokens, 3)), s, clamp=False)
    assert out.shape == (tokens, dim)
    assert abs(out.mean()) < 0.05
    assert abs(out.var() - 1.0) < 0.1


def test_class_means(schedule, class_oracle):
    count = 40
    labels = np.repeat([0, 1], count)
    out = sample(class_oracle, labels, np.zeros((2 * count, 3)), schedule, seed=3)
    for label, mu in ((0, 0.5), (1, -0.3)):
        values = out[labels == label]
        tolerance = 3 * np.sqrt(0.01 / values.size) + 0.01
        assert abs(values.mean() - mu) < tolerance


def test_sample_is_deterministic(schedule, class_oracle):
    labels = [0, 1, 1, 0]
    a = sample(class_oracle, labels, np.zeros((4, 3)), schedule, 4.0, seed=11)
    b = sample(class_oracle, labels, np.zeros((4, 3)), schedule, 4.0, seed=11)
    c = sample(class_oracle, labels, np.zeros((4, 3)), schedule, 4.0, seed=12)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_is_clamped(schedule):
    oracle = OracleGaussianDenoiser(schedule, 8, mu=0.0, sigma2=4.0)
    out = sample(oracle, np.zeros(10), np.zeros((10, 3)), schedule)
    assert out.min() >= -1.0 and out.max() <= 1.0


def test_permuting_tokens_permutes_output(schedule, class_oracle):
    keys = np.array([[0, 0, 0], [1, 0, 0], [0, 2, 1], [5, -1, 3]])
    labels = np.array([0, 1, 0, 1])
    centers = keys * 0.6
    out = sample(class_oracle, labels, centers, schedule, 4.0, seed=2, keys=keys)
    order = [2, 0, 3, 1]
    permuted = sample(
        class_oracle,
        labels[order],
        centers[order],
        schedule,
        4.0,
        seed=2,
        keys=keys[order],
    )
    assert np.array_equal(out[order], permuted)


def test_all_known_returns_inputs(schedule, class_oracle):
    ls = local_set(5, 6, known=np.ones(5, dtype=bool))
    assert np.array_equal(repaint_sample(class_oracle, ls, schedule), ls.tokens)


def test_nothing_known_equals_sample(schedule, class_oracle):
    ls = local_set(6, 6)
    a = repaint_sample(class_oracle, ls, schedule, 4.0, seed=9)
    b = sample(
        class_oracle, ls.semantics, ls.centers, schedule, 4.0, seed=9, keys=ls.indices
    )
    assert np.array_equal(a, b)


@pytest.mark.parametrize('mode', ['repaint', 'overwrite'])
@pytest.mark.parametrize('resample_count', [1, 3])
def test_known_rows_are_bit_equal(schedule, class_oracle, mode, resample_count):
    known = np.array([True, False, True, False, False, True])
    ls = local_set(6, 6, known=known, seed=4)
    out = repaint_sample(
        class_oracle,
        ls,
        schedule,
        guidance_scale=4.0,
        resample_count=resample_count,
        mode=mode,
    )
    assert np.array_equal(out[known], ls.tokens[known])
    assert np.all(np.abs(out[~known]) <= 1.0)


def test_target_rows_do_not_depend_on_their_inputs(schedule, class_oracle):
    known = np.array([True, False, False])
    a = local_set(3, 6, known=known, seed=0)
    b = LocalSet(a.indices, a.tokens.copy(), a.semantics, a.centers, known)
    b.tokens[~known] = 0.0
    assert np.array_equal(
        repaint_sample(class_oracle, a, schedule),
        repaint_sample(class_oracle, b, schedule),
    )


def test_conditional_mean_of_correlated_pair():
    """Inpainting one of two tokens with correlation 0.9 gives E[y | x] = 0.9 x."""
    s = ScheduleConfig(T=100).build()
    runs = 5000
    oracle = OracleJointGaussianDenoiser(
        s, [0.0, 0.0], [[1.0, 0.9], [0.9, 1.0]], token_dim=runs
    )
    x = np.random.default_rng(0).standard_normal(runs)
    ls = LocalSet(
        [[0, 0, 0], [1, 0, 0]],
        np.stack([x, np.zeros(runs)]),
        [0, 0],
        np.zeros((2, 3)),
        [True, False],
    )
    out = repaint_sample(oracle, ls, s, resample_count=10, clamp=False, seed=1)
    assert np.array_equal(out[0], x)
    y = out[1]
    slope = (x @ y) / (x @ x)
    assert abs(slope - 0.9) < 0.1
    for lo in (-1.5, -0.5, 0.5):
        rows = (x >= lo) & (x < lo + 1.0)
        assert abs(y[rows].mean() - 0.9 * x[rows].mean()) < 0.1


def test_repaint_errors(schedule, class_oracle):
    ls = local_set(3, 6, known=np.array([True, False, False]))
    with pytest.raises(ValueError):
        repaint_sample(class_oracle, ls, schedule, mode='blend')
    with pytest.raises(ValueError):
        repaint_sample(class_oracle, ls, schedule, resample_count=0)
    with pytest.raises(ShapeMismatchError):
        repaint_sample(class_oracle, local_set(3, 12), schedule)

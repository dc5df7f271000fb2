"""Closed-form posterior-mean denoisers for Gaussian sources."""
from typing import Mapping, Optional

import numpy as np

from voxfield.diffusion.schedule import NoiseSchedule
from voxfield.exceptions import ShapeMismatchError
from voxfield.models import NULL_LABEL


def oracle_gaussian_denoiser(
    x_t, t: int, schedule: NoiseSchedule, mu, sigma2
) -> np.ndarray:
    """E[x0 | x_t] for x0 ~ N(mu, sigma2 I), elementwise."""
    alpha_bar = schedule.alpha_bar_at(t)
    x_t = np.asarray(x_t, dtype=np.float64)
    return (np.sqrt(alpha_bar) * sigma2 * x_t + (1.0 - alpha_bar) * np.asarray(mu)) / (
        alpha_bar * sigma2 + (1.0 - alpha_bar)
    )


class OracleGaussianDenoiser:
    """Every token entry is an independent N(mu, sigma2) source."""

    def __init__(self, schedule: NoiseSchedule, token_dim: int, mu=0.0, sigma2=1.0):
        self.schedule = schedule
        self.token_dim = token_dim
        self.mu = mu
        self.sigma2 = sigma2

    def predict(self, x_t, t, semantics, centers):
        return oracle_gaussian_denoiser(x_t, t, self.schedule, self.mu, self.sigma2)


class OracleClassGaussianDenoiser:
    """
    Tokens of class c are N(means[c], sigma2 I).

    NULL rows use `null_mean`, by default the average of the class means,
    which plays the unconditional branch under guidance.
    """

    def __init__(
        self,
        schedule: NoiseSchedule,
        means: Mapping[int, np.ndarray],
        sigma2: float = 1.0,
        null_mean: Optional[np.ndarray] = None,
    ):
        self.schedule = schedule
        self.means = {int(c): np.asarray(m, dtype=np.float64) for c, m in means.items()}
        dims = {m.shape for m in self.means.values()}
        if len(dims) != 1:
            raise ValueError(
                'class means must share one shape, got {}'.format(sorted(dims))
            )
        self.token_dim = dims.pop()[0]
        if null_mean is None:
            null_mean = np.mean(list(self.means.values()), axis=0)
        self.null_mean = np.asarray(null_mean, dtype=np.float64)
        self.sigma2 = sigma2

    def mean_rows(self, semantics) -> np.ndarray:
        return np.stack(
            [
                self.null_mean if int(s) == NULL_LABEL else self.means[int(s)]
                for s in semantics
            ]
        )

    def predict(self, x_t, t, semantics, centers):
        return oracle_gaussian_denoiser(
            x_t, t, self.schedule, self.mean_rows(semantics), self.sigma2
        )


class OracleJointGaussianDenoiser:
    """
    Token rows jointly Gaussian, every column an independent draw.

    Column x0 ~ N(mean, cov) over the N rows; the posterior mean is
    mean + sqrt(abar) cov (abar cov + (1 - abar) I)^-1 (x_t - sqrt(abar) mean).
    """

    def __init__(self, schedule: NoiseSchedule, mean, cov, token_dim: int):
        self.schedule = schedule
        self.mean = np.asarray(mean, dtype=np.float64).reshape(-1)
        self.cov = np.asarray(cov, dtype=np.float64)
        if self.cov.shape != (len(self.mean), len(self.mean)):
            raise ShapeMismatchError(
                'joint covariance', self.cov.shape, self.mean.shape
            )
        self.token_dim = token_dim

    def predict(self, x_t, t, semantics, centers):
        x_t = np.asarray(x_t, dtype=np.float64)
        if len(x_t) != len(self.mean):
            raise ShapeMismatchError('joint oracle', x_t.shape, self.mean.shape)
        alpha_bar = self.schedule.alpha_bar_at(t)
        root = np.sqrt(alpha_bar)
        system = alpha_bar * self.cov + (1.0 - alpha_bar) * np.eye(len(self.mean))
        residual = x_t - root * self.mean[:, None]
        return self.mean[:, None] + root * self.cov @ np.linalg.solve(system, residual)

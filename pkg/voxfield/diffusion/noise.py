"""Forward process, DDPM posterior steps and classifier-free guidance."""
import numpy as np

from voxfield.diffusion.schedule import NoiseSchedule
from voxfield.exceptions import ShapeMismatchError


def q_sample(x0, t: int, eps, schedule: NoiseSchedule) -> np.ndarray:
    """Return x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
    schedule.check(t)
    x0 = np.asarray(x0)
    eps = np.asarray(eps)
    if x0.shape != eps.shape:
        raise ShapeMismatchError('q_sample', x0.shape, eps.shape)
    alpha_bar = schedule.alpha_bar_at(t)
    return np.sqrt(alpha_bar) * x0 + np.sqrt(1.0 - alpha_bar) * eps


def posterior_mean(x_t, x0_hat, t: int, schedule: NoiseSchedule) -> np.ndarray:
    """Mean of q(x_{t-1} | x_t, x0_hat)."""
    beta = schedule.beta_at(t)
    alpha_bar = schedule.alpha_bar_at(t)
    alpha_bar_prev = schedule.alpha_bar_at(t - 1)
    coef_x0 = np.sqrt(alpha_bar_prev) * beta / (1.0 - alpha_bar)
    coef_xt = np.sqrt(schedule.alpha_at(t)) * (1.0 - alpha_bar_prev) / (1.0 - alpha_bar)
    return coef_x0 * np.asarray(x0_hat) + coef_xt * np.asarray(x_t)


def ddpm_step(x_t, x0_hat, t: int, schedule: NoiseSchedule, noise) -> np.ndarray:
    """
    One reverse step of a sample-predicting model.

    At t == 1 the posterior variance is zero and `noise` is ignored.
    """
    schedule.check(t)
    x_t = np.asarray(x_t)
    x0_hat = np.asarray(x0_hat)
    if x_t.shape != x0_hat.shape:
        raise ShapeMismatchError('ddpm_step', x_t.shape, x0_hat.shape)
    mean = posterior_mean(x_t, x0_hat, t, schedule)
    if t == 1:
        return mean
    noise = np.asarray(noise)
    if noise.shape != x_t.shape:
        raise ShapeMismatchError('ddpm_step', x_t.shape, noise.shape)
    return mean + np.sqrt(schedule.posterior_variance_at(t)) * noise


def renoise_step(x_prev, t: int, schedule: NoiseSchedule, noise) -> np.ndarray:
    """Jump from level t-1 back to level t: q(x_t | x_{t-1})."""
    beta = schedule.beta_at(t)
    return np.sqrt(1.0 - beta) * np.asarray(x_prev) + np.sqrt(beta) * np.asarray(noise)


def cfg_combine(x0_cond, x0_uncond, scale: float) -> np.ndarray:
    """Guided prediction uncond + scale * (cond - uncond)."""
    x0_cond = np.asarray(x0_cond)
    x0_uncond = np.asarray(x0_uncond)
    if x0_cond.shape != x0_uncond.shape:
        raise ShapeMismatchError('cfg_combine', x0_cond.shape, x0_uncond.shape)
    return x0_uncond + scale * (x0_cond - x0_uncond)

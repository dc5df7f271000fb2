"""Linear beta schedules."""
import numpy as np

from voxfield.exceptions import ScheduleError, TimestepRangeError


class NoiseSchedule:
    """
    Beta, alpha and cumulative alpha tables for timesteps 1..T.

    Lookups are 1-based; `alpha_bar_at(0)` is 1 by convention.
    """

    def __init__(self, betas):
        betas = np.asarray(betas, dtype=np.float64).reshape(-1)
        if len(betas) == 0:
            raise ScheduleError('schedule needs at least one step')
        if np.any(betas <= 0) or np.any(betas >= 1):
            raise ScheduleError('betas must lie in (0, 1)')
        self.betas = betas
        self.alphas = 1.0 - betas
        self.alpha_bars = np.cumprod(self.alphas)
        for array in (self.betas, self.alphas, self.alpha_bars):
            array.flags.writeable = False

    @property
    def T(self) -> int:
        return len(self.betas)

    def check(self, t: int, lowest: int = 1) -> int:
        """Return `t` as int, raising when it is outside [lowest, T]."""
        if not lowest <= int(t) <= self.T:
            raise TimestepRangeError(
                'timestep {} outside [{}, {}]'.format(t, lowest, self.T)
            )
        return int(t)

    def beta_at(self, t: int) -> float:
        return float(self.betas[self.check(t) - 1])

    def alpha_at(self, t: int) -> float:
        return float(self.alphas[self.check(t) - 1])

    def alpha_bar_at(self, t: int) -> float:
        t = self.check(t, lowest=0)
        return 1.0 if t == 0 else float(self.alpha_bars[t - 1])

    def posterior_variance_at(self, t: int) -> float:
        """Return beta~_t = beta_t (1 - abar_{t-1}) / (1 - abar_t)."""
        return (
            self.beta_at(t)
            * (1.0 - self.alpha_bar_at(t - 1))
            / (1.0 - self.alpha_bar_at(t))
        )

    def __repr__(self):
        return 'NoiseSchedule(T={}, beta=[{:.3g}, {:.3g}])'.format(
            self.T, self.betas[0], self.betas[-1]
        )


def make_schedule(T: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """
    Linear beta schedule.

    :raises ScheduleError: Unless T >= 1 and 0 < beta_start <= beta_end < 1.
    """
    if int(T) < 1:
        raise ScheduleError('T must be >= 1, got {}'.format(T))
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ScheduleError(
            'need 0 < beta_start <= beta_end < 1, got {} and {}'.format(
                beta_start, beta_end
            )
        )
    return NoiseSchedule(np.linspace(beta_start, beta_end, int(T)))

"""Linear digitized annealing schedule."""

from dataclasses import dataclass

import numpy as np

__all__ = ["Schedule"]


@dataclass(frozen=True)
class Schedule:
    """Linear schedule with ``P`` steps of length ``dt``.

    Step ``p = 1..P`` has ``s_p = p / P``, ``beta_p = (1 - s_p) dt`` and
    ``gamma_p = s_p dt``; the total annealing time is ``tau = P dt``.
    """

    n_steps: int
    dt: float

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def tau(self):
        return self.n_steps * self.dt

    def s(self, p):
        return p / self.n_steps

    def beta(self, p):
        return (1.0 - p / self.n_steps) * self.dt

    def gamma(self, p):
        return (p / self.n_steps) * self.dt

    @property
    def steps(self):
        return range(1, self.n_steps + 1)

    @property
    def gammas(self):
        return np.arange(1, self.n_steps + 1) / self.n_steps * self.dt

    @property
    def betas(self):
        return (1.0 - np.arange(1, self.n_steps + 1) / self.n_steps) * self.dt

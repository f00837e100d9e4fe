"""Fixed-step integration."""

from collections.abc import Callable

import numpy as np

StateFn = Callable[[float, np.ndarray], np.ndarray]


def rk4_step(fun: StateFn, t: float, x: np.ndarray, dt: float) -> np.ndarray:
    """Advance x' = fun(t, x) by one classical Runge-Kutta step."""
    k1 = fun(t, x)
    k2 = fun(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = fun(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = fun(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

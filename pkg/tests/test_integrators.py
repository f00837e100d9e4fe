"""Tests for fixed-step integration."""

import numpy as np
import pytest

from safe_admittance.integrators import rk4_step


def test_rk4_exponential_decay():
    x = np.array([1.0])
    t, dt = 0.0, 0.01
    for _ in range(100):
        x = rk4_step(lambda s, y: -2.0 * y, t, x, dt)
        t += dt
    assert x[0] == pytest.approx(np.exp(-2.0), rel=1e-8)


def test_rk4_is_exact_for_cubic_time_input():
    x = rk4_step(lambda s, y: np.array([3.0 * s**2]), 1.0, np.array([1.0]), 0.5)
    assert x[0] == pytest.approx(1.5**3)

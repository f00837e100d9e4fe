"""Interaction-force and disturbance profiles."""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ForceProfile:
    """Piecewise force with cosine ramps on [t0, t1) and [t2, t3).

    The default breakpoints and the 0.3*pi ramp frequency reproduce the
    profile as printed, which jumps at t1 and t3. ``smooth`` rescales the
    ramp phase so each ramp meets its neighbouring plateau.
    """

    amplitude: np.ndarray
    breakpoints: tuple[float, float, float, float] = (10.0, 11.0, 20.0, 21.0)
    ramp_frequency: float = 0.3 * math.pi
    smooth: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "amplitude", np.atleast_1d(np.asarray(self.amplitude, float)))
        t0, t1, t2, t3 = self.breakpoints
        if not t0 < t1 <= t2 < t3:
            raise ValueError(f"force breakpoints must increase, got {self.breakpoints}")

    def __call__(self, t: float) -> np.ndarray:
        return force_profile(t, self)

    def peak(self) -> np.ndarray:
        """Largest force each axis reaches, 2 * |amplitude_i|."""
        return 2.0 * np.abs(self.amplitude)


def force_profile(t: float, profile: ForceProfile) -> np.ndarray:
    a = profile.amplitude
    t0, t1, t2, t3 = profile.breakpoints
    if t < t0 or t >= t3:
        return np.zeros_like(a)
    if t < t1:
        phase = math.pi * (t - t0) / (t1 - t0) if profile.smooth else profile.ramp_frequency * t
        return a * (1.0 - math.cos(phase))
    if t < t2:
        return 2.0 * a
    phase = math.pi * (t - t2) / (t3 - t2) if profile.smooth else profile.ramp_frequency * t
    return a * (1.0 + math.cos(phase))


@dataclass
class DisturbanceProfile:
    """d = amplitude * sin(frequency * t) + noise * r, r ~ U[0, 1], inside (start, stop)."""

    amplitude: float = 0.1
    frequency: float = 50.0
    noise: float = 0.05
    start: float = 15.0
    stop: float = 25.0
    enabled: bool = True
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    def bound(self) -> float:
        return abs(self.amplitude) + abs(self.noise)

    def __call__(self, t: float) -> float:
        return disturbance(t, self)


def disturbance(t: float, profile: DisturbanceProfile) -> float:
    """One sample of the disturbance; draws from the profile's generator inside the window."""
    if not profile.enabled or not profile.start < t < profile.stop:
        return 0.0
    r = float(profile.rng.uniform(0.0, 1.0))
    return profile.amplitude * math.sin(profile.frequency * t) + profile.noise * r

"""Box constraints, invariance functions and the subsystem indicator.

The constraint on axis i is |xi_i| <= eta_i(t). In error coordinates around the
desired pose it reads h_i = |e_i + xi_d_i| - eta_bar_i(t) <= 0, where
eta_bar = eta - D_bar leaves room for the plant to deviate from the reference.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from safe_admittance.errors import ConditionViolated, ConfigRejected

log = logging.getLogger(__name__)

GAMMA_CLAMP = 1e-3


@dataclass(frozen=True)
class BoxConstraints:
    """Per-axis bound eta_i(t) = offset_i + amplitude_i * sin(frequency_i * t)."""

    offset: np.ndarray
    amplitude: np.ndarray
    frequency: np.ndarray
    desired_pose: np.ndarray
    dbar: float = 0.0
    hysteresis: float = 0.0
    dwell: float = 0.05

    def __post_init__(self) -> None:
        for name in ("offset", "amplitude", "frequency", "desired_pose"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), float)))
        m = self.dim
        for name in ("amplitude", "frequency", "desired_pose"):
            if getattr(self, name).shape != (m,):
                raise ConfigRejected(f"constraints.{name} must have {m} entries")
        if self.dbar < 0:
            raise ConfigRejected("envelope D_bar must be nonnegative")
        if self.hysteresis < 0 or self.dwell < 0:
            raise ConfigRejected("hysteresis and dwell must be nonnegative")

    @property
    def dim(self) -> int:
        return self.offset.shape[0]

    def bound(self, t: float) -> np.ndarray:
        return self.offset + self.amplitude * np.sin(self.frequency * t)

    def bound_rate(self, t: float) -> np.ndarray:
        return self.amplitude * self.frequency * np.cos(self.frequency * t)

    def bound_accel(self, t: float) -> np.ndarray:
        return -self.amplitude * self.frequency**2 * np.sin(self.frequency * t)

    def shrunk_bound(self, t: float) -> np.ndarray:
        return self.bound(t) - self.dbar

    def min_shrunk_bound(self) -> np.ndarray:
        """Smallest value eta_bar_i takes over all t."""
        return self.offset - np.abs(self.amplitude) - self.dbar

    def validate(self) -> None:
        """Require the desired pose strictly inside the shrunk set at every t."""
        inner = self.min_shrunk_bound()
        bad = np.flatnonzero(inner <= np.abs(self.desired_pose))
        if bad.size:
            i = int(bad[0])
            raise ConfigRejected(
                f"desired pose {self.desired_pose[i]:g} on axis {i + 1} is not inside "
                f"the shrunk bound (min {inner[i]:g})"
            )


def _split(E_r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = len(E_r) // 2
    return E_r[:m], E_r[m:]


def constraint_h(
    E_r: np.ndarray, t: float, box: BoxConstraints, axis: int | None = None, shrink: bool = True
) -> np.ndarray | float:
    """h_i = |e_r_i + xi_d_i| - eta_bar_i(t); all axes when axis is None."""
    e, _ = _split(E_r)
    limit = box.shrunk_bound(t) if shrink else box.bound(t)
    h = np.abs(e + box.desired_pose) - limit
    return h if axis is None else float(h[axis])


def constraint_hdot(
    E_r: np.ndarray, t: float, box: BoxConstraints, axis: int | None = None
) -> np.ndarray | float:
    """h_i' = sign(e_r_i + xi_d_i) * e_r_i' - eta_bar_i'(t), with sign(0) = 0."""
    e, edot = _split(E_r)
    hdot = np.sign(e + box.desired_pose) * edot - box.bound_rate(t)
    return hdot if axis is None else float(hdot[axis])


def gamma_term(
    A2: np.ndarray,
    E_r: np.ndarray,
    B_a: np.ndarray,
    f_ext: np.ndarray,
    box: BoxConstraints,
    axis: int | None = None,
) -> np.ndarray | float:
    """Signed acceleration of the safety subsystem along each constraint, clamped below zero."""
    m = box.dim
    e, _ = _split(E_r)
    accel = (A2 @ E_r + B_a @ np.atleast_1d(f_ext))[m:]
    gamma = np.minimum(np.sign(e + box.desired_pose) * accel, -GAMMA_CLAMP)
    return gamma if axis is None else float(gamma[axis])


def phi1(h, hdot, gamma):
    """Relative-degree-two invariance function.

    Phi = h while the constraint value is not increasing, otherwise
    Phi = h - hdot**2 / (2 * gamma), the peak h would reach under the
    deceleration gamma < 0.
    """
    h = np.asarray(h, dtype=float)
    hdot = np.asarray(hdot, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    phi = np.where(hdot <= 0.0, h, h - hdot**2 / (2.0 * gamma))
    return float(phi) if phi.ndim == 0 else phi


class InvarianceValues(NamedTuple):
    phi: np.ndarray
    h: np.ndarray
    hdot: np.ndarray
    gamma: np.ndarray

    @property
    def phi_max(self) -> float:
        return float(np.max(self.phi))


def invariance_values(
    E_r: np.ndarray,
    f_ext: np.ndarray,
    t: float,
    box: BoxConstraints,
    A2: np.ndarray,
    B_a: np.ndarray,
) -> InvarianceValues:
    h = constraint_h(E_r, t, box)
    hdot = constraint_hdot(E_r, t, box)
    gamma = gamma_term(A2, E_r, B_a, f_ext, box)
    return InvarianceValues(np.atleast_1d(phi1(h, hdot, gamma)), h, hdot, gamma)


def phi_max(
    E_r: np.ndarray,
    f_ext: np.ndarray,
    t: float,
    box: BoxConstraints,
    A2: np.ndarray,
    B_a: np.ndarray,
) -> float:
    return invariance_values(E_r, f_ext, t, box, A2, B_a).phi_max


@dataclass
class A2Report:
    """Per-axis margins of the safety-subsystem admissibility check."""

    margins: np.ndarray

    @property
    def worst_axis(self) -> int:
        return int(np.argmin(self.margins))

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margins >= 0))


def verify_a2_condition(
    A2: np.ndarray,
    B_a: np.ndarray,
    force_bound: float | np.ndarray,
    box: BoxConstraints,
    velocity_bound: float = 0.0,
) -> A2Report:
    """Check 2|B_a f_bar| <= |A2 E_bar| on every boundary point of the shrunk set.

    Boundary points sit on either side of each axis at the tightest shrunk
    bound, at rest and (when velocity_bound > 0) moving outward. The
    acceleration of A2 E_bar must point inward, so the signed component is
    used.

    Raises:
        ConditionViolated: for the axis with the most negative margin.
    """
    m = box.dim
    inner = box.min_shrunk_bound()
    f_bar = np.broadcast_to(np.asarray(force_bound, dtype=float), (B_a.shape[1],))
    push = 2.0 * (np.abs(B_a) @ f_bar)[m:]
    speeds = [0.0] if velocity_bound <= 0 else [0.0, float(velocity_bound)]
    margins = np.full(m, math.inf)
    for i in range(m):
        for side in (1.0, -1.0):
            for speed in speeds:
                E_bar = np.zeros(2 * m)
                E_bar[i] = side * inner[i] - box.desired_pose[i]
                E_bar[m + i] = side * speed
                restoring = -side * (A2 @ E_bar)[m + i]
                margins[i] = min(margins[i], restoring - push[i])
    report = A2Report(margins)
    if not report.passed:
        raise ConditionViolated(report.worst_axis, report.min_margin)
    log.info("A2 condition holds, per-axis margins %s", np.round(margins, 6).tolist())
    return report


def default_hysteresis(box: BoxConstraints, fraction: float = 0.02) -> float:
    """Band width as a fraction of the smallest |h| at the desired pose."""
    h0 = constraint_h(np.zeros(2 * box.dim), 0.0, box)
    return fraction * float(np.min(np.abs(h0)))


@dataclass
class SwitchState:
    """Active subsystem and switch history for one run."""

    p: int = 1
    t_last_switch: float = -math.inf
    switches: int = 0
    history: list[tuple[float, int]] = field(default_factory=list)


def indicator(
    E_r: np.ndarray,
    f_ext: np.ndarray,
    t: float,
    box: BoxConstraints,
    A2: np.ndarray,
    B_a: np.ndarray,
    state: SwitchState,
) -> int:
    """Select the compliant (1) or safety (2) subsystem and record the switch.

    Axes with Phi_i above -hysteresis are active. The safety subsystem is
    entered as soon as Phi_max >= 0 or an active axis moves outward. The
    compliant one is re-entered only once Phi_max <= -hysteresis, no active
    axis moves outward and the dwell time has passed.
    """
    values = invariance_values(E_r, f_ext, t, box, A2, B_a)
    active = values.phi > -box.hysteresis
    outward = bool(np.any(values.hdot[active] > 0.0))

    p = state.p
    if state.p == 1:
        if values.phi_max >= 0.0 or outward:
            p = 2
    elif (
        values.phi_max <= -box.hysteresis
        and not outward
        and t - state.t_last_switch >= box.dwell
    ):
        p = 1

    if p != state.p:
        log.debug("subsystem %d -> %d at t = %.4f (phi_max %.3e)", state.p, p, t, values.phi_max)
        state.p = p
        state.t_last_switch = t
        state.switches += 1
        state.history.append((t, p))
    return p

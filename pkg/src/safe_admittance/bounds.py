"""Closed-form tracking-error bounds for overdamped second-order axes.

Each axis of a subsystem matrix contributes the lower-block entries
k1 (stiffness) and k2 (damping), both negative for a stable axis. The error
e_a = E - E_r obeys e_a' = A_p e_a + w with |w| <= D in the acceleration
channel, and the functions below give the exact worst-case response.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from safe_admittance.errors import NotHurwitz, Underdamped
from safe_admittance.reference import lower_blocks

log = logging.getLogger(__name__)

CONFLUENT_TOL = 1e-8


class AxisEigenData(NamedTuple):
    k1: float
    k2: float
    delta: float
    lam1: float
    lam2: float

    @property
    def confluent(self) -> bool:
        return abs(self.lam2 - self.lam1) < CONFLUENT_TOL


def axis_eigen(k1: float, k2: float) -> AxisEigenData:
    """Eigen data of [[0, 1], [k1, k2]].

    Raises:
        NotHurwitz: if k1 >= 0 or k2 >= 0.
        Underdamped: if k2**2 + 4*k1 <= 0.
    """
    k1, k2 = float(k1), float(k2)
    if k1 >= 0 or k2 >= 0:
        raise NotHurwitz(f"axis with k1 = {k1:g}, k2 = {k2:g} is not Hurwitz")
    disc = k2 * k2 + 4.0 * k1
    if disc <= 0:
        raise Underdamped(
            f"axis with k1 = {k1:g}, k2 = {k2:g} has complex eigenvalues "
            f"(k2^2 + 4 k1 = {disc:g}); error bounds need real ones"
        )
    delta = math.sqrt(disc)
    return AxisEigenData(k1, k2, delta, 0.5 * (k2 - delta), 0.5 * (k2 + delta))


def axes_from_matrix(A: np.ndarray) -> list[AxisEigenData]:
    k, d = lower_blocks(A)
    return [axis_eigen(k1, k2) for k1, k2 in zip(k, d, strict=True)]


def position_bound_limit(k1: float) -> float:
    """Supremum over t of the position bound per unit D."""
    if k1 >= 0:
        raise NotHurwitz(f"k1 = {k1:g} must be negative")
    return -1.0 / k1


def stationary_time(lam1: float, lam2: float) -> float:
    """Time at which (e^{lam2 t} - e^{lam1 t}) peaks."""
    if abs(lam1 - lam2) < CONFLUENT_TOL:
        return 1.0 / abs(0.5 * (lam1 + lam2))
    return math.log(lam2 / lam1) / (lam1 - lam2)


def velocity_bound_beta(lam1: float, lam2: float, delta: float | None = None) -> float:
    """Peak of the velocity bound per unit D."""
    if abs(lam1 - lam2) < CONFLUENT_TOL:
        lam = 0.5 * (lam1 + lam2)
        return -1.0 / (lam * math.e)
    delta = lam2 - lam1 if delta is None else delta
    ts = stationary_time(lam1, lam2)
    return (math.exp(lam2 * ts) - math.exp(lam1 * ts)) / delta


def _axis_bound(t: np.ndarray, ax: AxisEigenData) -> tuple[np.ndarray, np.ndarray]:
    if ax.confluent:
        lam = 0.5 * (ax.lam1 + ax.lam2)
        ex = np.exp(lam * t)
        return (ex * (lam * t - 1.0) + 1.0) / lam**2, t * ex
    b1 = np.expm1(ax.lam1 * t)
    b2 = np.expm1(ax.lam2 * t)
    position = (b1 * ax.lam2 - b2 * ax.lam1) / (ax.k1 * ax.delta)
    velocity = (b2 - b1) / ax.delta
    return position, velocity


def error_bound_vector(t, D: float, axes: list[AxisEigenData]) -> np.ndarray:
    """Per-entry bound [positions..., velocities...] at time t (or along an array of times)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    parts = [_axis_bound(t, ax) for ax in axes]
    positions = [D * pos for pos, _ in parts]
    velocities = [D * vel for _, vel in parts]
    return np.stack(positions + velocities, axis=-1)


@dataclass
class ErrorEnvelope:
    D: float
    position_limits: np.ndarray
    velocity_maxima: np.ndarray
    dbar: float

    @property
    def entries(self) -> np.ndarray:
        return np.concatenate([self.position_limits, self.velocity_maxima])


def error_envelope(D: float, axes: list[AxisEigenData]) -> ErrorEnvelope:
    if D < 0:
        raise ValueError("D must be nonnegative")
    positions = np.array([D * position_bound_limit(ax.k1) for ax in axes])
    velocities = np.array([D * velocity_bound_beta(ax.lam1, ax.lam2, ax.delta) for ax in axes])
    dbar = float(np.max(np.concatenate([positions, velocities]))) if axes else 0.0
    return ErrorEnvelope(D, positions, velocities, dbar)


def envelope_dbar(D: float, axes: list[AxisEigenData]) -> float:
    return error_envelope(D, axes).dbar


def conservative_envelope(D: float, A1: np.ndarray, A2: np.ndarray) -> tuple[ErrorEnvelope, int]:
    """Envelope of whichever subsystem yields the larger D_bar, with its index."""
    envelopes = [error_envelope(D, axes_from_matrix(A)) for A in (A1, A2)]
    p = 1 if envelopes[0].dbar >= envelopes[1].dbar else 2
    log.info("disturbance envelope D_bar = %.6g (subsystem %d)", envelopes[p - 1].dbar, p)
    return envelopes[p - 1], p


class EnvelopeRow(NamedTuple):
    subsystem: int
    axis: int
    lam1: float
    lam2: float
    delta: float
    t_s: float
    beta: float
    limit: float


def envelope_rows(A1: np.ndarray, A2: np.ndarray) -> list[EnvelopeRow]:
    """One row per subsystem and axis, per unit D."""
    rows = []
    for p, A in ((1, A1), (2, A2)):
        for i, ax in enumerate(axes_from_matrix(A)):
            rows.append(
                EnvelopeRow(
                    p,
                    i + 1,
                    ax.lam1,
                    ax.lam2,
                    ax.delta,
                    stationary_time(ax.lam1, ax.lam2),
                    velocity_bound_beta(ax.lam1, ax.lam2, ax.delta),
                    position_bound_limit(ax.k1),
                )
            )
    return rows

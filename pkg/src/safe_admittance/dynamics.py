"""Rigid-body manipulator models and computed-torque linearization.

Both arms move in a horizontal plane (or about a vertical rotary axis), so the
gravity vector is identically zero.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from safe_admittance.errors import ConfigRejected, SingularInertia

log = logging.getLogger(__name__)

SINGULAR_DET = 1e-8
DLS_DAMPING = 1e-4


@dataclass(frozen=True)
class TwoLinkModel:
    """Frictionless two-link planar arm."""

    m1: float = 1.5
    m2: float = 1.0
    l1: float = 0.3
    l2: float = 0.3

    def __post_init__(self) -> None:
        for name in ("m1", "m2", "l1", "l2"):
            if not getattr(self, name) > 0:
                raise ConfigRejected(f"model.{name} must be strictly positive")

    @property
    def dof(self) -> int:
        return 2

    def inertia(self, q: np.ndarray) -> np.ndarray:
        """Inertia matrix read off the two explicit joint-torque equations."""
        m1, m2, l1, l2 = self.m1, self.m2, self.l1, self.l2
        c2 = math.cos(q[1])
        m12 = m2 * l2**2 + m2 * l1 * l2 * c2
        m11 = m2 * l2**2 + 2.0 * m2 * l1 * l2 * c2 + (m1 + m2) * l1**2
        return np.array([[m11, m12], [m12, m2 * l2**2]])

    def coriolis(self, q: np.ndarray, qdot: np.ndarray) -> np.ndarray:
        """Coriolis matrix C with M' - 2C skew-symmetric."""
        hs = self.m2 * self.l1 * self.l2 * math.sin(q[1])
        return hs * np.array([[-qdot[1], -(qdot[0] + qdot[1])], [qdot[0], 0.0]])


@dataclass(frozen=True)
class SingleLinkModel:
    """DC-motor driven rotary link, J*w' + B*w = A_m*V_m + tau_ext."""

    J_eq: float = 0.0023
    B_eq: float = 0.0844
    A_m: float = 0.129
    l: float = 0.1525

    def __post_init__(self) -> None:
        if not (self.J_eq > 0 and self.B_eq >= 0 and self.A_m > 0 and self.l > 0):
            raise ConfigRejected("single-link model needs J_eq > 0, B_eq >= 0, A_m > 0, l > 0")

    @property
    def dof(self) -> int:
        return 1


@dataclass
class JointState:
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=float)
        self.qdot = np.asarray(self.qdot, dtype=float)
        if self.q.shape != self.qdot.shape:
            raise ValueError("q and qdot must have the same dimension")


class TaskCommand(NamedTuple):
    """Joint acceleration command and whether the damped inverse was used."""

    v: np.ndarray
    damped: bool


def forward_kinematics(model: TwoLinkModel, q: np.ndarray) -> np.ndarray:
    q1, q12 = q[0], q[0] + q[1]
    return np.array([
        model.l1 * math.cos(q1) + model.l2 * math.cos(q12),
        model.l1 * math.sin(q1) + model.l2 * math.sin(q12),
    ])


def inverse_kinematics(model: TwoLinkModel, xi: np.ndarray) -> np.ndarray:
    """Elbow solution with q2 in (0, pi)."""
    x, y = float(xi[0]), float(xi[1])
    c2 = (x * x + y * y - model.l1**2 - model.l2**2) / (2.0 * model.l1 * model.l2)
    if not -1.0 <= c2 <= 1.0:
        raise ConfigRejected(f"task pose {xi.tolist()} is outside the workspace")
    q2 = math.acos(c2)
    q1 = math.atan2(y, x) - math.atan2(model.l2 * math.sin(q2), model.l1 + model.l2 * c2)
    return np.array([q1, q2])


def jacobian(model: TwoLinkModel, q: np.ndarray) -> np.ndarray:
    s1, c1 = math.sin(q[0]), math.cos(q[0])
    s12, c12 = math.sin(q[0] + q[1]), math.cos(q[0] + q[1])
    l1, l2 = model.l1, model.l2
    return np.array([
        [-l1 * s1 - l2 * s12, -l2 * s12],
        [l1 * c1 + l2 * c12, l2 * c12],
    ])


def jacobian_dot(model: TwoLinkModel, q: np.ndarray, qdot: np.ndarray) -> np.ndarray:
    s1, c1 = math.sin(q[0]), math.cos(q[0])
    s12, c12 = math.sin(q[0] + q[1]), math.cos(q[0] + q[1])
    w1, w12 = qdot[0], qdot[0] + qdot[1]
    l1, l2 = model.l1, model.l2
    return np.array([
        [-l1 * c1 * w1 - l2 * c12 * w12, -l2 * c12 * w12],
        [-l1 * s1 * w1 - l2 * s12 * w12, -l2 * s12 * w12],
    ])


def is_singular(J: np.ndarray) -> bool:
    """True when |det J| is below the singularity threshold."""
    return abs(np.linalg.det(J)) < SINGULAR_DET


def pseudo_solve(J: np.ndarray, rhs: np.ndarray) -> TaskCommand:
    """Apply J^+ to rhs, switching to damped least squares near singularity."""
    if is_singular(J):
        JJt = J @ J.T + DLS_DAMPING**2 * np.eye(J.shape[0])
        return TaskCommand(J.T @ np.linalg.solve(JJt, rhs), True)
    return TaskCommand(np.linalg.solve(J, rhs), False)


def forward_dynamics(
    model: TwoLinkModel, state: JointState, tau: np.ndarray, tau_e: np.ndarray
) -> np.ndarray:
    """Joint accelerations from M q'' + C q' = tau + tau_e."""
    M = model.inertia(state.q)
    rhs = tau + tau_e - model.coriolis(state.q, state.qdot) @ state.qdot
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularInertia(f"inertia matrix not invertible at q = {state.q}") from exc


def computed_torque(
    model: TwoLinkModel, state: JointState, v: np.ndarray, f_ext: np.ndarray
) -> np.ndarray:
    """tau_c = M v + C q' + G - J^T f_ext, with G = 0."""
    M = model.inertia(state.q)
    C = model.coriolis(state.q, state.qdot)
    return M @ v + C @ state.qdot - jacobian(model, state.q).T @ f_ext


def task_space_command(model: TwoLinkModel, state: JointState, u: np.ndarray) -> TaskCommand:
    """v = J^+ (u - J' q'), rendering xi'' = u under computed torque."""
    J = jacobian(model, state.q)
    rhs = u - jacobian_dot(model, state.q, state.qdot) @ state.qdot
    command = pseudo_solve(J, rhs)
    if command.damped:
        log.debug("damped pseudo-inverse engaged at q = %s", state.q)
    return command


def single_link_dynamics(
    model: SingleLinkModel, omega: float, V_m: float, tau_ext: float
) -> float:
    return (model.A_m * V_m + tau_ext - model.B_eq * omega) / model.J_eq


def single_link_voltage(model: SingleLinkModel, omega: float, u: float, tau_hat: float) -> float:
    """Motor voltage that renders theta'' = u when tau_hat matches the external torque."""
    return (model.J_eq * u + model.B_eq * omega - tau_hat) / model.A_m

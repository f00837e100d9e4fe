"""Switched piecewise-affine reference model E_r' = A_p E_r + B_a f_ext."""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from safe_admittance.errors import ConfigRejected, NotHurwitz
from safe_admittance.integrators import rk4_step

ForceInput = np.ndarray | Callable[[float], np.ndarray]


def is_hurwitz(A: np.ndarray) -> bool:
    return bool(np.max(np.linalg.eigvals(A).real) < 0)


def subsystem_matrix(stiffness, damping) -> np.ndarray:
    """Assemble [[0, I], [-diag(k), -diag(d)]] from per-axis magnitudes.

    Raises:
        NotHurwitz: if the assembled matrix is not strictly stable.
    """
    k = np.atleast_1d(np.asarray(stiffness, dtype=float))
    d = np.atleast_1d(np.asarray(damping, dtype=float))
    if k.shape != d.shape:
        raise ConfigRejected("stiffness and damping must have one entry per axis")
    m = k.shape[0]
    A = np.zeros((2 * m, 2 * m))
    A[:m, m:] = np.eye(m)
    A[m:, :m] = -np.diag(k)
    A[m:, m:] = -np.diag(d)
    if not is_hurwitz(A):
        raise NotHurwitz(f"subsystem with k = {k.tolist()}, d = {d.tolist()} is not Hurwitz")
    return A


def compliant_matrix(stiffness=(10.0, 10.0), damping=(15.0, 15.0)) -> np.ndarray:
    return subsystem_matrix(stiffness, damping)


def safety_matrix(stiffness=(40.0, 40.0), damping=(50.0, 50.0)) -> np.ndarray:
    return subsystem_matrix(stiffness, damping)


def lower_blocks(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed per-axis (k, d) diagonals of a subsystem matrix."""
    m = A.shape[0] // 2
    return np.diag(A[m:, :m]).copy(), np.diag(A[m:, m:]).copy()


@dataclass(frozen=True)
class ReferenceModelSet:
    """The compliant (A1) and safety (A2) subsystems sharing one input matrix."""

    A1: np.ndarray
    A2: np.ndarray
    B_a: np.ndarray

    def __post_init__(self) -> None:
        n = self.B_a.shape[0]
        m = n // 2
        for name in ("A1", "A2"):
            A = getattr(self, name)
            if A.shape != (n, n):
                raise ConfigRejected(f"{name} must be {n}x{n}")
            if np.any(A[:m, :m]) or not np.array_equal(A[:m, m:], np.eye(m)):
                raise ConfigRejected(f"{name} top blocks must be exactly [0, I]")
            if not is_hurwitz(A):
                raise NotHurwitz(f"{name} is not Hurwitz")

    @property
    def dim(self) -> int:
        return self.B_a.shape[1]

    def matrix(self, p: int) -> np.ndarray:
        if p == 1:
            return self.A1
        if p == 2:
            return self.A2
        raise ValueError(f"subsystem index must be 1 or 2, got {p}")


@dataclass
class ReferenceState:
    E_r: np.ndarray
    p: int = 1

    def pose(self, desired_pose: np.ndarray) -> np.ndarray:
        """xi_r = e_r + xi_d."""
        m = len(self.E_r) // 2
        return self.E_r[:m] + desired_pose


def _force_at(force: ForceInput, t: float) -> np.ndarray:
    return np.atleast_1d(force(t) if callable(force) else force)


def reference_rate(
    E_r: np.ndarray, models: ReferenceModelSet, p: int, f_ext: np.ndarray
) -> np.ndarray:
    return models.matrix(p) @ E_r + models.B_a @ np.atleast_1d(f_ext)


def reference_step(
    state: ReferenceState,
    models: ReferenceModelSet,
    force: ForceInput,
    t: float,
    dt: float,
    p: int | None = None,
) -> ReferenceState:
    """Advance the reference by one RK4 step with subsystem p held over the step.

    ``force`` is either a constant task force or a profile evaluated at each
    stage time.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = state.p if p is None else p
    E_next = rk4_step(
        lambda s, x: reference_rate(x, models, p, _force_at(force, s)), t, state.E_r, dt
    )
    return ReferenceState(E_next, p)

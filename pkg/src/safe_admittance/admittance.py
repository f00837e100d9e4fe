"""Admittance relation and its error-space state-space realization."""

from dataclasses import dataclass

import numpy as np

from safe_admittance.errors import ConfigRejected, NonInvertibleMass


def _as_matrix(value, m: int | None = None) -> np.ndarray:
    """Accept a scalar, a diagonal vector or a full matrix."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(m or 1)
    if arr.ndim == 1:
        return np.diag(arr)
    return arr


def _check_spd(name: str, mat: np.ndarray) -> None:
    if mat.shape[0] != mat.shape[1]:
        raise ConfigRejected(f"admittance.{name} must be square, got shape {mat.shape}")
    if not np.allclose(mat, mat.T):
        raise ConfigRejected(f"admittance.{name} must be symmetric")
    if np.linalg.eigvalsh(mat).min() <= 0:
        raise ConfigRejected(f"admittance.{name} must be positive definite")


@dataclass(frozen=True)
class AdmittanceParams:
    """Virtual mass, damping and stiffness (each m x m, SPD)."""

    mass: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray

    @classmethod
    def from_values(cls, mass, damping, stiffness) -> "AdmittanceParams":
        D = _as_matrix(damping)
        m = D.shape[0]
        return cls(_as_matrix(mass, m), D, _as_matrix(stiffness, m))

    def __post_init__(self) -> None:
        for name in ("mass", "damping", "stiffness"):
            mat = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, mat)
            _check_spd(name, mat)
        if not self.mass.shape == self.damping.shape == self.stiffness.shape:
            raise ConfigRejected("admittance matrices must share one dimension")

    @property
    def dim(self) -> int:
        return self.mass.shape[0]


@dataclass
class ErrorState:
    """Task-space error e = xi - xi_d and its rate."""

    e: np.ndarray
    edot: np.ndarray

    def __post_init__(self) -> None:
        self.e = np.asarray(self.e, dtype=float)
        self.edot = np.asarray(self.edot, dtype=float)

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.e, self.edot])

    @classmethod
    def from_stacked(cls, E: np.ndarray) -> "ErrorState":
        m = len(E) // 2
        return cls(E[:m], E[m:])


def _inverse_mass(params: AdmittanceParams) -> np.ndarray:
    try:
        return np.linalg.inv(params.mass)
    except np.linalg.LinAlgError as exc:
        raise NonInvertibleMass("virtual mass matrix is singular") from exc


def build_state_space(params: AdmittanceParams) -> tuple[np.ndarray, np.ndarray]:
    """Return (A_a, B_a) for E' = A_a E + B_a u_c."""
    m = params.dim
    Minv = _inverse_mass(params)
    A_a = np.zeros((2 * m, 2 * m))
    A_a[:m, m:] = np.eye(m)
    A_a[m:, :m] = -Minv @ params.stiffness
    A_a[m:, m:] = -Minv @ params.damping
    B_a = np.zeros((2 * m, m))
    B_a[m:, :] = Minv
    return A_a, B_a


def admittance_control(
    E: ErrorState, xi_dd: np.ndarray, u_c: np.ndarray, params: AdmittanceParams
) -> np.ndarray:
    """u = xi_d'' - M_a^-1 (D_a e' + K_a e - u_c)."""
    rhs = params.damping @ E.edot + params.stiffness @ E.e - u_c
    return xi_dd - np.linalg.solve(params.mass, rhs)

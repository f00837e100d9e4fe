"""Model-reference adaptation: matching gains, gain law and Lyapunov certificates."""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from safe_admittance.errors import NoCommonP, NotHurwitz, StructureMismatch
from safe_admittance.reference import is_hurwitz

log = logging.getLogger(__name__)

ALPHA_GRID = 1001


def matching_gains(A_a: np.ndarray, B_a: np.ndarray, A_p: np.ndarray) -> np.ndarray:
    """K_p* with A_a + B_a K_p* = A_p.

    Raises:
        StructureMismatch: if B_a is not [0; M_a^-1] or A_p - A_a touches the top rows.
    """
    m = B_a.shape[1]
    if np.any(B_a[:m]):
        raise StructureMismatch("B_a must have a zero upper block")
    diff = A_p - A_a
    if np.any(np.abs(diff[:m]) > 0):
        raise StructureMismatch("A_p - A_a has nonzero upper block rows; no matching gain exists")
    M_a = np.linalg.inv(B_a[m:])
    return M_a @ diff[m:]


def control_uc(K: np.ndarray, E: np.ndarray, f_ext: np.ndarray) -> np.ndarray:
    """u_c = K E + f_ext."""
    return K @ E + np.atleast_1d(f_ext)


def gain_rate(
    Gamma: np.ndarray, B_a: np.ndarray, P: np.ndarray, e_a: np.ndarray, E: np.ndarray
) -> np.ndarray:
    """K' = -Gamma B_a^T P e_a E^T."""
    return -np.outer(Gamma @ B_a.T @ P @ e_a, E)


def gain_update_step(
    K: np.ndarray,
    Gamma: np.ndarray,
    B_a: np.ndarray,
    P: np.ndarray,
    e_a: np.ndarray,
    E: np.ndarray,
    dt: float,
) -> np.ndarray:
    return K + dt * gain_rate(Gamma, B_a, P, e_a, E)


def solve_lyapunov(A: np.ndarray, Q: np.ndarray | None = None) -> np.ndarray:
    """Solve A^T P + P A = -Q for a 2x2 block through its three unknowns.

    Raises:
        NotHurwitz: if A is not Hurwitz or the linear system is singular.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise StructureMismatch(f"expected a 2x2 block, got shape {A.shape}")
    Q = np.eye(2) if Q is None else np.asarray(Q, dtype=float)
    if not is_hurwitz(A):
        raise NotHurwitz(f"Lyapunov equation has no SPD solution for {A.tolist()}")
    (a, b), (c, d) = A
    lhs = np.array([
        [2 * a, 2 * c, 0.0],
        [b, a + d, c],
        [0.0, 2 * b, 2 * d],
    ])
    rhs = -np.array([Q[0, 0], 0.5 * (Q[0, 1] + Q[1, 0]), Q[1, 1]])
    try:
        p11, p12, p22 = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise NotHurwitz("Lyapunov linear system is singular") from exc
    return np.array([[p11, p12], [p12, p22]])


def lyapunov_margin(A_list: list[np.ndarray], P: np.ndarray) -> float:
    """min over A in A_list of lambda_min(-(A^T P + P A))."""
    return min(float(np.linalg.eigvalsh(-(A.T @ P + P @ A)).min()) for A in A_list)


class CommonLyapunov(NamedTuple):
    P: np.ndarray
    margin: float


def _axis_block(A: np.ndarray, i: int, m: int) -> np.ndarray:
    idx = [i, m + i]
    return A[np.ix_(idx, idx)]


def find_common_P(A1: np.ndarray, A2: np.ndarray, grid: int = ALPHA_GRID) -> CommonLyapunov:
    """Common quadratic Lyapunov matrix for the subsystem pair.

    Per axis, the convex combinations alpha * P1 + (1 - alpha) * P2 of the
    individual solutions are scanned and the one with the largest worst-case
    decay margin is kept. The axis blocks are assembled block-diagonally and
    the margin is re-checked on the full matrices.

    Raises:
        NoCommonP: if the best margin found is not strictly positive.
    """
    m = A1.shape[0] // 2
    alphas = np.linspace(0.0, 1.0, grid)[:, None, None]
    P = np.zeros_like(A1, dtype=float)
    best = np.inf
    for i in range(m):
        blocks = [_axis_block(A1, i, m), _axis_block(A2, i, m)]
        try:
            P1, P2 = (solve_lyapunov(block) for block in blocks)
        except NotHurwitz as exc:
            raise NoCommonP(-np.inf) from exc
        candidates = alphas * P1 + (1.0 - alphas) * P2
        worst = np.min(
            [
                np.linalg.eigvalsh(-(np.swapaxes(Ab, -1, -2) @ candidates + candidates @ Ab))[:, 0]
                for Ab in blocks
            ],
            axis=0,
        )
        k = int(np.argmax(worst))
        best = min(best, float(worst[k]))
        idx = [i, m + i]
        P[np.ix_(idx, idx)] = candidates[k]

    margin = lyapunov_margin([A1, A2], P)
    if best <= 0 or margin <= 0:
        raise NoCommonP(min(best, margin))
    log.info("common Lyapunov matrix found with margin %.6g", margin)
    return CommonLyapunov(P, margin)


def lyapunov_value(
    e_a: np.ndarray,
    K_tilde: list[np.ndarray],
    P: np.ndarray,
    Gamma: list[np.ndarray],
) -> float:
    """V = 1/2 e_a^T P e_a + 1/2 sum_p tr(K~_p^T Gamma_p^-1 K~_p)."""
    V = 0.5 * float(e_a @ P @ e_a)
    for Kt, G in zip(K_tilde, Gamma, strict=True):
        V += 0.5 * float(np.trace(Kt.T @ np.linalg.solve(G, Kt)))
    return V


@dataclass
class AdaptiveGainSet:
    """Gains K_1, K_2 with their rates, matching values and the common P."""

    K: list[np.ndarray]
    Gamma: list[np.ndarray]
    P: np.ndarray
    K_star: list[np.ndarray]
    margin: float = 0.0

    def __post_init__(self) -> None:
        for G in self.Gamma:
            if np.any(G != np.diag(np.diag(G))) or np.any(np.diag(G) <= 0):
                raise StructureMismatch("adaptation rates must be diagonal and positive")

    @classmethod
    def initialize(
        cls,
        A_a: np.ndarray,
        B_a: np.ndarray,
        A1: np.ndarray,
        A2: np.ndarray,
        rates,
        offset: float = 0.0,
    ) -> "AdaptiveGainSet":
        """Start each gain at its matching value shifted by ``offset``."""
        K_star = [matching_gains(A_a, B_a, A) for A in (A1, A2)]
        P, margin = find_common_P(A1, A2)
        Gamma = np.diag(np.atleast_1d(np.asarray(rates, dtype=float)))
        return cls(
            K=[Ks + offset for Ks in K_star],
            Gamma=[Gamma.copy(), Gamma.copy()],
            P=P,
            K_star=K_star,
            margin=margin,
        )

    def active(self, p: int) -> np.ndarray:
        return self.K[p - 1]

    def tilde(self) -> list[np.ndarray]:
        return [K - Ks for K, Ks in zip(self.K, self.K_star, strict=True)]

    def value(self, e_a: np.ndarray) -> float:
        return lyapunov_value(e_a, self.tilde(), self.P, self.Gamma)


@dataclass
class LyapunovRecord:
    t: float
    V: float
    Vdot_observed: float


def lyapunov_trace(t: np.ndarray, V: np.ndarray) -> list[LyapunovRecord]:
    """Pair each logged V with its backward-difference rate (zero at the first row)."""
    Vdot = np.zeros_like(V, dtype=float)
    Vdot[1:] = np.diff(V) / np.diff(t)
    return [LyapunovRecord(float(a), float(b), float(c)) for a, b, c in zip(t, V, Vdot)]


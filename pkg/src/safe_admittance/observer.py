"""Generalized-momentum residual observer for the single-link arm."""

from dataclasses import dataclass

from safe_admittance.dynamics import SingleLinkModel
from safe_admittance.errors import ConfigRejected


@dataclass
class ResidualObserverState:
    gain: float
    integral: float = 0.0
    estimate: float = 0.0
    initial_momentum: float = 0.0
    last_omega: float = 0.0

    def __post_init__(self) -> None:
        if not self.gain > 0:
            raise ConfigRejected("observer gain K_o must be positive")

    @classmethod
    def start(cls, gain: float, model: SingleLinkModel, omega0: float = 0.0):
        return cls(gain=gain, initial_momentum=model.J_eq * omega0, last_omega=omega0)


def residual_step(
    obs: ResidualObserverState, model: SingleLinkModel, omega: float, V_m: float, dt: float
) -> float:
    """Advance the residual by one sample with V_m held over it.

    r = K_o (J w - J w0 - int(A_m V - B w + r)), integrated with the
    trapezoidal rule and solved implicitly for the new r.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    g0 = model.A_m * V_m - model.B_eq * obs.last_omega
    g1 = model.A_m * V_m - model.B_eq * omega
    half = 0.5 * dt
    momentum = model.J_eq * omega - obs.initial_momentum
    r_new = obs.gain * (momentum - obs.integral - half * (g0 + obs.estimate + g1))
    r_new /= 1.0 + obs.gain * half
    obs.integral += half * (g0 + obs.estimate + g1 + r_new)
    obs.estimate = r_new
    obs.last_omega = omega
    return r_new


def noise_error_bound(model: SingleLinkModel, gain: float, noise: float) -> float:
    """Worst-case estimate error caused by velocity noise bounded by ``noise``."""
    return (model.B_eq + 2.0 * gain * model.J_eq) * noise

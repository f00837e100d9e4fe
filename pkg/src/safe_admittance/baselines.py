"""Pure invariance-control baseline: nominal admittance with a boundary override."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from safe_admittance.admittance import AdmittanceParams
from safe_admittance.errors import ConfigRejected
from safe_admittance.safety import BoxConstraints, phi1


@dataclass(frozen=True)
class InvarianceBaselineConfig:
    """gamma: commanded constraint curvature on override; horizon: deadbeat time for h'."""

    gamma: float = -5.0
    horizon: float = 0.005

    def __post_init__(self) -> None:
        if not self.gamma < 0:
            raise ConfigRejected("baseline gamma must be negative")
        if not self.horizon > 0:
            raise ConfigRejected("baseline horizon must be positive")


class BaselineCommand(NamedTuple):
    u_c: np.ndarray
    active: bool
    axis: int | None = None


def invariance_control_step(
    E: np.ndarray,
    t: float,
    box: BoxConstraints,
    u_c: np.ndarray,
    params: AdmittanceParams,
    config: InvarianceBaselineConfig,
    xi_dd: np.ndarray | None = None,
) -> BaselineCommand:
    """Pass u_c through while Phi < 0 on the true bound, else override the worst axis.

    The override commands h'' = min(gamma, -h'/horizon) on the most violated
    axis and maps it back through the admittance law to an auxiliary input.
    """
    m = box.dim
    e, edot = E[:m], E[m:]
    xi_dd = np.zeros(m) if xi_dd is None else xi_dd
    pose = e + box.desired_pose
    sign = np.sign(pose)
    h = np.abs(pose) - box.bound(t)
    hdot = sign * edot - box.bound_rate(t)
    phi = np.atleast_1d(phi1(h, hdot, np.full(m, config.gamma)))
    if np.max(phi) < 0:
        return BaselineCommand(u_c, False)

    i = int(np.argmax(phi))
    hdd = min(config.gamma, -max(float(hdot[i]), 0.0) / config.horizon)
    rhs = params.damping @ edot + params.stiffness @ e
    u = xi_dd - np.linalg.solve(params.mass, rhs - u_c)
    u[i] = sign[i] * (hdd + box.bound_accel(t)[i]) if sign[i] != 0 else hdd
    corrected = params.mass @ (u - xi_dd) + rhs
    return BaselineCommand(corrected, True, i)

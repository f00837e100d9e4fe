"""Scenario assembly and the closed-loop simulation.

One step of the loop reads the interaction force and disturbance, lets the
indicator pick the reference subsystem, then advances plant, reference model
and active gain together. Two plants are supported: the two-link arm under
computed torque and the single-link motor under voltage control.
"""

import dataclasses
import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from safe_admittance import dynamics
from safe_admittance.admittance import (
    AdmittanceParams,
    ErrorState,
    admittance_control,
    build_state_space,
)
from safe_admittance.baselines import InvarianceBaselineConfig, invariance_control_step
from safe_admittance.bounds import ErrorEnvelope, conservative_envelope
from safe_admittance.dynamics import JointState, SingleLinkModel, TwoLinkModel
from safe_admittance.errors import NumericalDivergence, StructureMismatch
from safe_admittance.integrators import rk4_step
from safe_admittance.models import TrajectoryLog
from safe_admittance.mrac import (
    AdaptiveGainSet,
    control_uc,
    gain_rate,
    gain_update_step,
    lyapunov_value,
)
from safe_admittance.observer import ResidualObserverState, residual_step
from safe_admittance.profiles import DisturbanceProfile, ForceProfile
from safe_admittance.reference import (
    ReferenceModelSet,
    ReferenceState,
    reference_rate,
    reference_step,
    subsystem_matrix,
)
from safe_admittance.safety import (
    A2Report,
    BoxConstraints,
    SwitchState,
    default_hysteresis,
    indicator,
    invariance_values,
    verify_a2_condition,
)
from safe_admittance.scenario import Scenario

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e6


@dataclass
class Design:
    """Everything derived from a scenario before the first step."""

    scenario: Scenario
    params: AdmittanceParams
    A_a: np.ndarray
    models: ReferenceModelSet
    box: BoxConstraints
    envelope: ErrorEnvelope
    envelope_subsystem: int
    a2_report: A2Report
    gains: AdaptiveGainSet
    force: ForceProfile

    @property
    def B_a(self) -> np.ndarray:
        return self.models.B_a

    @property
    def dim(self) -> int:
        return self.models.dim


def _vector(values, m: int) -> np.ndarray:
    return np.zeros(m) if values is None else np.asarray(values, dtype=float)


def build_subsystems(
    scenario: Scenario,
) -> tuple[AdmittanceParams, np.ndarray, ReferenceModelSet]:
    """Admittance parameters, A_a and the reference subsystem pair.

    Raises:
        ConfigRejected: if a matrix is not SPD, not Hurwitz or badly structured.
    """
    m = scenario.dim
    adm = scenario.admittance
    params = AdmittanceParams.from_values(adm.mass, adm.damping, adm.stiffness)
    A_a, B_a = build_state_space(params)

    ref = scenario.reference
    if ref.use_admittance:
        lower = A_a[m:]
        if np.any(lower[:, :m] != np.diag(np.diag(lower[:, :m]))) or np.any(
            lower[:, m:] != np.diag(np.diag(lower[:, m:]))
        ):
            raise StructureMismatch("use_admittance needs diagonal M_a^-1 K_a and M_a^-1 D_a")
        A1 = A_a.copy()
    else:
        A1 = subsystem_matrix(ref.compliant_stiffness, ref.compliant_damping)
    A2 = subsystem_matrix(ref.safety_stiffness, ref.safety_damping)
    return params, A_a, ReferenceModelSet(A1, A2, B_a)


def build_design(scenario: Scenario) -> Design:
    """Run every configuration-time check and assemble the controller.

    Raises:
        ConfigRejected: with the first failed check (Hurwitz, envelope, A2
            condition, common Lyapunov matrix).
    """
    m = scenario.dim
    params, A_a, models = build_subsystems(scenario)
    A1, A2, B_a = models.A1, models.A2, models.B_a

    envelope, env_p = conservative_envelope(scenario.envelope.D, A1, A2)
    dbar = envelope.dbar
    if scenario.envelope.dbar is not None:
        if scenario.envelope.dbar < envelope.dbar:
            log.warning(
                "configured D_bar %.6g is below the computed envelope %.6g",
                scenario.envelope.dbar,
                envelope.dbar,
            )
        dbar = scenario.envelope.dbar

    cons = scenario.constraints
    box = BoxConstraints(
        offset=np.asarray(cons.offset, dtype=float),
        amplitude=_vector(cons.amplitude, m),
        frequency=_vector(cons.frequency, m),
        desired_pose=np.asarray(scenario.task.desired_pose, dtype=float),
        dbar=dbar,
        dwell=cons.dwell,
    )
    box.validate()
    box = dataclasses.replace(box, hysteresis=default_hysteresis(box, cons.hysteresis_fraction))

    a2_report = verify_a2_condition(
        A2, B_a, np.asarray(scenario.force.bound, dtype=float), box, cons.velocity_bound
    )
    gains = AdaptiveGainSet.initialize(
        A_a, B_a, A1, A2, scenario.adaptation.rates, scenario.adaptation.offset
    )
    force = ForceProfile(
        amplitude=np.asarray(scenario.force.amplitude, dtype=float),
        breakpoints=tuple(scenario.force.breakpoints),
        smooth=scenario.force.smooth,
    )
    over = np.flatnonzero(force.peak() > np.atleast_1d(scenario.force.bound) + 1e-12)
    for i in over:
        log.warning(
            "force on axis %d peaks at %.6g, above the declared force bound",
            i + 1,
            force.peak()[i],
        )
    return Design(scenario, params, A_a, models, box, envelope, env_p, a2_report, gains, force)


def log_columns(m: int, joints: int) -> list[str]:
    """Trajectory CSV header in its fixed order."""
    axes = range(1, m + 1)
    cols = ["t"]
    for prefix in ("xi", "xi_dot", "xi_r", "xi_d", "e", "edot", "er", "erdot"):
        cols += [f"{prefix}_{i}" for i in axes]
    cols += [f"ea_{i}" for i in range(1, 2 * m + 1)]
    cols.append("p")
    cols += [f"uc_{i}" for i in axes]
    cols += [f"u_{i}" for i in axes]
    cols += [f"tau_{j}" for j in range(1, joints + 1)]
    for p in (1, 2):
        cols += [f"k{p}_{r}_{c}" for r in axes for c in range(1, 2 * m + 1)]
    cols += ["V", "lyap_margin", "phi_max"]
    cols += [f"h_{i}" for i in axes]
    cols += [f"f_{i}" for i in axes]
    cols += [f"fhat_{i}" for i in axes]
    cols.append("d")
    return cols


def _disturbance(scenario: Scenario) -> DisturbanceProfile:
    dist = scenario.disturbance
    return DisturbanceProfile(
        amplitude=dist.amplitude,
        frequency=dist.frequency,
        noise=dist.noise,
        start=dist.start,
        stop=dist.stop,
        enabled=dist.enabled,
        rng=np.random.default_rng(scenario.seed),
    )


def _check_finite(x: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT:
        raise NumericalDivergence(t)


@dataclass
class _Row:
    """Quantities logged at one sample."""

    xi: np.ndarray
    xi_dot: np.ndarray
    E: np.ndarray
    E_r: np.ndarray
    p: int
    u_c: np.ndarray
    u: np.ndarray
    tau: np.ndarray
    K: list[np.ndarray]
    f: np.ndarray
    f_hat: np.ndarray
    d: float


class _Recorder:
    def __init__(self, design: Design, joints: int, steps: int):
        self.design = design
        self.columns = log_columns(design.dim, joints)
        self.data = np.empty((steps + 1, len(self.columns)))
        self.k = 0

    def record(self, t: float, row: _Row) -> None:
        d = self.design
        xi_d = d.box.desired_pose
        e_a = row.E - row.E_r
        m = d.dim
        phi = invariance_values(row.E_r, row.f_hat, t, d.box, d.models.A2, d.B_a).phi_max
        K_tilde = [K - Ks for K, Ks in zip(row.K, d.gains.K_star, strict=True)]
        V = lyapunov_value(e_a, K_tilde, d.gains.P, d.gains.Gamma)
        self.data[self.k] = np.concatenate([
            [t],
            row.xi,
            row.xi_dot,
            row.E_r[:m] + xi_d,
            xi_d,
            row.E,
            row.E_r,
            e_a,
            [row.p],
            row.u_c,
            row.u,
            row.tau,
            row.K[0].ravel(),
            row.K[1].ravel(),
            [V, d.gains.margin, phi],
            np.abs(row.xi) - d.box.bound(t),
            row.f,
            row.f_hat,
            [row.d],
        ])
        self.k += 1

    def finish(self) -> TrajectoryLog:
        s = self.design.scenario
        return TrajectoryLog.from_array(self.columns, self.data[: self.k], s.name, s.controller)


class _Controller:
    """Auxiliary input of the selected controller."""

    def __init__(self, design: Design):
        self.design = design
        s = design.scenario
        self.baseline = (
            InvarianceBaselineConfig(s.baseline.gamma, s.baseline.horizon)
            if s.controller == "invariance_baseline"
            else None
        )

    def __call__(
        self, t: float, E: np.ndarray, K: np.ndarray, f: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, bool]:
        d = self.design
        m = d.dim
        xi_dd = np.zeros(m)
        if self.baseline is None:
            u_c = control_uc(K, E, f)
            active = False
        else:
            u_c, active, _ = invariance_control_step(
                E, t, d.box, np.atleast_1d(f), d.params, self.baseline, xi_dd
            )
        u = admittance_control(ErrorState.from_stacked(E), xi_dd, u_c, d.params)
        return u_c, u, active


def _run_two_link(design: Design, force: Callable[[float], np.ndarray]) -> TrajectoryLog:
    s = design.scenario
    model: TwoLinkModel = s.model
    m, n = design.dim, 2 * design.dim
    dt, steps = s.simulation.dt, s.steps
    xi_d = design.box.desired_pose
    models, B_a, P = design.models, design.B_a, design.gains.P
    proposed = s.controller == "proposed"
    controller = _Controller(design)
    disturbance = _disturbance(s)
    switch = SwitchState()
    recorder = _Recorder(design, joints=2, steps=steps)

    q0 = dynamics.inverse_kinematics(model, xi_d)
    # x = [q, qdot, E_r, vec(K_1), vec(K_2)]
    sizes = [2, 2, n, m * n, m * n]
    cuts = np.cumsum(sizes)[:-1]
    x = np.concatenate([q0, np.zeros(2), np.zeros(n), *(K.ravel() for K in design.gains.K)])

    def unpack(x: np.ndarray):
        q, qd, E_r, k1, k2 = np.split(x, cuts)
        return JointState(q, qd), E_r, [k1.reshape(m, n), k2.reshape(m, n)]

    def evaluate(t: float, x: np.ndarray, p: int, d: float):
        state, E_r, K = unpack(x)
        xi = dynamics.forward_kinematics(model, state.q)
        J = dynamics.jacobian(model, state.q)
        xi_dot = J @ state.qdot
        E = np.concatenate([xi - xi_d, xi_dot])
        f = force(t)
        u_c, u, active = controller(t, E, K[p - 1], f)
        v = dynamics.task_space_command(model, state, u).v
        tau = dynamics.computed_torque(model, state, v, f)
        tau_e = J.T @ f
        if d:
            tau_e = tau_e + model.inertia(state.q) @ dynamics.pseudo_solve(J, np.full(m, d)).v
        qdd = dynamics.forward_dynamics(model, state, tau, tau_e)
        p_ref = p if proposed else 1
        E_r_dot = reference_rate(E_r, models, p_ref, f)
        K_dot = [np.zeros((m, n)), np.zeros((m, n))]
        if proposed:
            K_dot[p - 1] = gain_rate(design.gains.Gamma[p - 1], B_a, P, E - E_r, E)
        xdot = np.concatenate([state.qdot, qdd, E_r_dot, K_dot[0].ravel(), K_dot[1].ravel()])
        row = _Row(xi, xi_dot, E, E_r, p, u_c, u, tau, K, f, f, d)
        return xdot, row, active

    for k in range(steps + 1):
        t = k * dt
        f_now = force(t)
        d = disturbance(t)
        if proposed:
            _, E_r, _ = unpack(x)
            p = indicator(E_r, f_now, t, design.box, models.A2, B_a, switch)
        else:
            p = 1
        # p and d are held over the RK4 stages
        _, row, active = evaluate(t, x, p, d)
        if not proposed:
            row.p = 2 if active else 1
        recorder.record(t, row)
        if k == steps:
            break
        x = rk4_step(lambda ts, xs: evaluate(ts, xs, p, d)[0], t, x, dt)
        _check_finite(x, t + dt)

    _, _, K_final = unpack(x)
    design.gains.K = K_final
    log.debug("two-link run finished with %d switches", switch.switches)
    return recorder.finish()


def _run_single_link(design: Design, force: Callable[[float], np.ndarray]) -> TrajectoryLog:
    s = design.scenario
    model: SingleLinkModel = s.model
    dt, steps = s.simulation.dt, s.steps
    xi_d = design.box.desired_pose
    models, B_a, P = design.models, design.B_a, design.gains.P
    proposed = s.controller == "proposed"
    controller = _Controller(design)
    disturbance = _disturbance(s)
    noise_rng = np.random.default_rng(None if s.seed is None else s.seed + 1)
    noise = s.observer.velocity_noise
    observer = ResidualObserverState.start(s.observer.gain, model) if s.observer.enabled else None
    switch = SwitchState()
    recorder = _Recorder(design, joints=1, steps=steps)
    gains = design.gains

    def measure(omega: float) -> float:
        return omega + (noise * noise_rng.uniform(-1.0, 1.0) if noise > 0 else 0.0)

    theta, omega = float(xi_d[0]), 0.0
    omega_meas = measure(omega)
    reference = ReferenceState(np.zeros(2), 1)

    for k in range(steps + 1):
        t = k * dt
        f_true = force(t)
        f_ctrl = f_true if observer is None else np.array([observer.estimate / model.l])
        d = disturbance(t)
        if proposed:
            p = indicator(reference.E_r, f_ctrl, t, design.box, models.A2, B_a, switch)
        else:
            p = 1
        E = np.array([theta - xi_d[0], omega_meas])
        u_c, u, active = controller(t, E, gains.active(p), f_ctrl)
        tau_hat = float(f_ctrl[0]) * model.l
        V_m = dynamics.single_link_voltage(model, omega_meas, float(u[0]), tau_hat)
        row = _Row(
            np.array([theta]),
            np.array([omega]),
            E,
            reference.E_r,
            p if proposed else (2 if active else 1),
            u_c,
            u,
            np.array([model.A_m * V_m]),
            [K.copy() for K in gains.K],
            f_true,
            f_ctrl,
            d,
        )
        recorder.record(t, row)
        if k == steps:
            break

        def plant(ts: float, xs: np.ndarray, V_m=V_m, d=d) -> np.ndarray:
            tau_ext = float(force(ts)[0]) * model.l + model.J_eq * d
            return np.array([xs[1], dynamics.single_link_dynamics(model, xs[1], V_m, tau_ext)])

        theta, omega = rk4_step(plant, t, np.array([theta, omega]), dt)
        reference = reference_step(reference, models, f_ctrl, t, dt, p if proposed else 1)
        if proposed:
            gains.K[p - 1] = gain_update_step(
                gains.K[p - 1], gains.Gamma[p - 1], B_a, P, E - row.E_r, E, dt
            )
        state = [[theta, omega], reference.E_r, *(K.ravel() for K in gains.K)]
        _check_finite(np.concatenate(state), t + dt)
        # estimate for the next sample uses the voltage just applied
        omega_meas = measure(omega)
        if observer is not None:
            residual_step(observer, model, omega_meas, V_m, dt)

    log.debug("single-link run finished with %d switches", switch.switches)
    return recorder.finish()


def run_scenario(scenario: Scenario, design: Design | None = None) -> TrajectoryLog:
    """Simulate a scenario from its desired pose at rest.

    Deterministic for a fixed seed. Adapted gains are written back into
    ``design.gains``.

    Raises:
        ConfigRejected: if a configuration-time check fails.
        NumericalDivergence: if a state leaves the admissible range.
    """
    design = design or build_design(scenario)
    if scenario.is_single_link:
        return _run_single_link(design, design.force)
    return _run_two_link(design, design.force)

"""Error indices, control-effort summaries and the safety report of a logged run."""

import numpy as np

from safe_admittance.errors import LogFormatError
from safe_admittance.models import ErrorIndices, MetricsRecord, SafetyReport, TrajectoryLog

REQUIRED_COLUMNS = ("t", "p", "xi_1", "xi_d_1", "u_1")
PROPOSED_TOLERANCE = 1e-3
BASELINE_TOLERANCE = 1e-2


def check_log(log: TrajectoryLog) -> None:
    """Reject logs without the required columns, with fewer than two rows or a non-uniform step."""
    missing = [name for name in REQUIRED_COLUMNS if not log.has(name)]
    if missing:
        raise LogFormatError(f"trajectory log is missing column '{missing[0]}'")
    if len(log) < 2:
        raise LogFormatError("trajectory log needs at least two rows")
    steps = np.diff(log.t)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-12):
        raise LogFormatError("trajectory log time column must increase with a uniform step")


def error_indices(t: np.ndarray, e: np.ndarray) -> ErrorIndices:
    """ISE, IAE, ITSE and ITAE of one signal by the trapezoidal rule."""
    sq, ab = e**2, np.abs(e)
    return ErrorIndices(
        ise=float(np.trapezoid(sq, t)),
        iae=float(np.trapezoid(ab, t)),
        itse=float(np.trapezoid(t * sq, t)),
        itae=float(np.trapezoid(t * ab, t)),
    )


def _sum_indices(parts: list[ErrorIndices]) -> ErrorIndices:
    return ErrorIndices(
        ise=sum(p.ise for p in parts),
        iae=sum(p.iae for p in parts),
        itse=sum(p.itse for p in parts),
        itae=sum(p.itae for p in parts),
    )


def count_switches(p: np.ndarray) -> int:
    return int(np.count_nonzero(np.diff(p)))


def compute_metrics(log: TrajectoryLog, channel: str = "1") -> MetricsRecord:
    """Error indices of xi - xi_d on the selected channel plus control summaries.

    ``channel`` is an axis number ("1", "2", ...), "sum" for the per-axis
    indices added together, or "norm" for the Euclidean error norm.
    """
    check_log(log)
    t = log.t
    errors = log.block("xi") - log.block("xi_d")
    per_axis = [error_indices(t, errors[:, i]) for i in range(errors.shape[1])]
    summed = _sum_indices(per_axis)

    if channel == "sum":
        selected = summed
    elif channel == "norm":
        selected = error_indices(t, np.linalg.norm(errors, axis=1))
    elif channel.isdigit() and 1 <= int(channel) <= len(per_axis):
        selected = per_axis[int(channel) - 1]
    else:
        raise LogFormatError(f"unknown error channel '{channel}'")

    u = log.block("u")
    duration = float(t[-1] - t[0])
    rms = float(np.sqrt(np.trapezoid(np.sum(u**2, axis=1), t) / duration))
    tv = float(np.sum(np.abs(np.diff(u, axis=0))))
    return MetricsRecord(
        channel=channel,
        indices=selected,
        per_axis=per_axis,
        summed=summed,
        rms_u=rms,
        tv_u=tv,
        switches=count_switches(log.column("p")),
    )


def safety_report(log: TrajectoryLog, tolerance: float | None = None) -> SafetyReport:
    """Per-axis worst |xi_i| - eta_i(t), first violation time and switching summary."""
    check_log(log)
    if tolerance is None:
        baseline = log.controller == "invariance_baseline"
        tolerance = BASELINE_TOLERANCE if baseline else PROPOSED_TOLERANCE
    t = log.t
    h = log.block("h")
    exceeded = np.flatnonzero(np.any(h > tolerance, axis=1))
    p = log.column("p")
    return SafetyReport(
        max_h=h.max(axis=0),
        first_violation=float(t[exceeded[0]]) if exceeded.size else None,
        switches=count_switches(p),
        time_in_safety=float(np.count_nonzero(p[:-1] == 2) * log.dt),
        tolerance=tolerance,
        max_phi=float(np.max(log.column("phi_max"))) if log.has("phi_max") else None,
    )

"""Tests for error indices, control summaries and safety reports."""

import numpy as np
import pytest

from safe_admittance.errors import LogFormatError
from safe_admittance.metrics import (
    check_log,
    compute_metrics,
    count_switches,
    error_indices,
    safety_report,
)
from safe_admittance.models import TrajectoryLog


def make_log(t, e, u=None, p=None, h=None, controller="proposed") -> TrajectoryLog:
    """Two-axis log with axis-2 error zero."""
    n = len(t)
    u = np.zeros((n, 2)) if u is None else u
    p = np.ones(n) if p is None else p
    h = -np.ones((n, 2)) if h is None else h
    columns = ["t", "xi_1", "xi_2", "xi_d_1", "xi_d_2", "u_1", "u_2", "p", "h_1", "h_2"]
    data = np.column_stack([t, 0.1 + e, np.full(n, 0.2), np.full(n, 0.1), np.full(n, 0.2), u, p, h])
    return TrajectoryLog.from_array(columns, data, controller=controller)


@pytest.fixture
def t():
    return np.linspace(0.0, 1.0, 1001)


class TestErrorIndices:
    def test_constant_error(self, t):
        idx = error_indices(t, np.ones_like(t))
        assert idx.ise == pytest.approx(1.0)
        assert idx.iae == pytest.approx(1.0)
        assert idx.itse == pytest.approx(0.5)
        assert idx.itae == pytest.approx(0.5)

    def test_ramp_error(self, t):
        idx = error_indices(t, -t)
        assert idx.ise == pytest.approx(1.0 / 3.0, rel=1e-5)
        assert idx.iae == pytest.approx(0.5)
        assert idx.itse == pytest.approx(0.25, rel=1e-5)


class TestComputeMetrics:
    def test_channels(self, t):
        log = make_log(t, np.ones_like(t))
        assert compute_metrics(log, "1").indices.ise == pytest.approx(1.0)
        assert compute_metrics(log, "2").indices.ise == pytest.approx(0.0)
        assert compute_metrics(log, "sum").indices.iae == pytest.approx(1.0)
        assert compute_metrics(log, "norm").indices.ise == pytest.approx(1.0)
        assert len(compute_metrics(log).per_axis) == 2

    def test_unknown_channel(self, t):
        with pytest.raises(LogFormatError, match="channel"):
            compute_metrics(make_log(t, np.zeros_like(t)), "3")

    def test_control_summaries(self, t):
        u = np.column_stack([np.full_like(t, 3.0), np.full_like(t, 4.0)])
        u[500:, 0] = -3.0
        p = np.ones_like(t)
        p[200:300] = 2
        record = compute_metrics(make_log(t, np.zeros_like(t), u=u, p=p))
        assert record.rms_u == pytest.approx(5.0)
        assert record.tv_u == pytest.approx(6.0)
        assert record.switches == 2

    def test_row_for_batch_summary(self, t):
        row = compute_metrics(make_log(t, np.ones_like(t))).as_row("a")
        assert row["label"] == "a"
        assert row["ise"] == pytest.approx(1.0)


class TestCheckLog:
    def test_missing_column(self, t):
        log = TrajectoryLog.from_array(["t", "p"], np.column_stack([t, np.ones_like(t)]))
        with pytest.raises(LogFormatError, match="xi_1"):
            check_log(log)

    def test_single_row(self):
        log = make_log(np.array([0.0]), np.array([0.0]))
        with pytest.raises(LogFormatError, match="two rows"):
            check_log(log)

    def test_non_uniform_step(self):
        t = np.array([0.0, 0.1, 0.3])
        with pytest.raises(LogFormatError, match="uniform"):
            check_log(make_log(t, np.zeros(3)))


class TestSafetyReport:
    def test_clean_run(self, t):
        report = safety_report(make_log(t, np.zeros_like(t)))
        assert not report.violated
        assert report.first_violation is None
        assert np.allclose(report.max_h, -1.0)

    def test_first_violation_time(self, t):
        h = -np.ones((len(t), 2))
        h[400:, 1] = 0.005
        report = safety_report(make_log(t, np.zeros_like(t), h=h))
        assert report.violated
        assert report.first_violation == pytest.approx(0.4)
        assert report.max_h[1] == pytest.approx(0.005)

    def test_baseline_tolerance_is_looser(self, t):
        h = np.full((len(t), 2), 0.005)
        report = safety_report(make_log(t, np.zeros_like(t), h=h, controller="invariance_baseline"))
        assert report.tolerance == pytest.approx(1e-2)
        assert not report.violated

    def test_time_in_safety_subsystem(self, t):
        p = np.ones_like(t)
        p[100:350] = 2
        report = safety_report(make_log(t, np.zeros_like(t), p=p))
        assert report.time_in_safety == pytest.approx(0.25)
        assert report.switches == 2
        assert report.max_phi is None
        assert ("switch_count", "2") in report.as_pairs()


def test_count_switches():
    assert count_switches(np.array([1, 1, 2, 2, 1, 2])) == 3

"""Closed-loop simulation tests on shortened scenarios."""

import dataclasses

import numpy as np
import pytest

from safe_admittance import simulator
from safe_admittance.errors import ConditionViolated, NumericalDivergence, StructureMismatch
from safe_admittance.metrics import compute_metrics, safety_report
from safe_admittance.mrac import lyapunov_trace
from safe_admittance.scenario import bundled_text, load_scenario, parse_scenario
from safe_admittance.simulator import build_design, build_subsystems, log_columns, run_scenario
from safe_admittance.utils.filesystem import write_trajectory


def fast_contact_text() -> str:
    """Constant-bound scenario with the force window pulled into the first seconds."""
    text = bundled_text("two_link_constant_bound")
    text = text.replace("duration = 50.0", "duration = 5.0")
    text = text.replace(
        "bound = [3.0, 2.0]",
        "bound = [3.0, 2.0]\nbreakpoints = [0.5, 1.0, 4.5, 5.5]\nsmooth = true",
    )
    return text.replace("enabled = true", "enabled = false")


@pytest.fixture(scope="module")
def contact_runs():
    proposed = parse_scenario(fast_contact_text())
    baseline = proposed.with_overrides(controller="invariance_baseline")
    return run_scenario(proposed), run_scenario(baseline)


class TestDesign:
    def test_bundled_design(self):
        design = build_design(load_scenario("two_link_time_varying"))
        assert design.envelope.dbar == pytest.approx(0.015)
        assert design.envelope_subsystem == 1
        assert design.box.hysteresis == pytest.approx(0.02 * 0.135)
        assert design.a2_report.passed
        assert design.gains.margin > 0
        assert design.dim == 2

    def test_single_link_design(self):
        design = build_design(load_scenario("single_link_hw"))
        assert design.dim == 1
        assert design.envelope.dbar == pytest.approx(0.02)
        assert design.a2_report.min_margin == pytest.approx(20 * 0.23 - 4.0)

    def test_force_warning_is_per_axis(self, caplog):
        build_design(load_scenario("two_link_constant_bound"))
        assert "peaks at" not in caplog.text
        text = bundled_text("two_link_constant_bound").replace(
            "bound = [3.0, 2.0]", "bound = [2.0, 2.0]"
        )
        build_design(parse_scenario(text))
        assert "force on axis 1 peaks at 3" in caplog.text
        assert "axis 2" not in caplog.text

    def test_configured_dbar_overrides_envelope(self):
        text = bundled_text("two_link_time_varying").replace("D = 0.15", "D = 0.15\ndbar = 0.03")
        design = build_design(parse_scenario(text))
        assert design.box.dbar == pytest.approx(0.03)

    def test_rejects_force_bound_beyond_safety_subsystem(self):
        text = bundled_text("two_link_time_varying").replace("bound = 2.0", "bound = 3.0")
        with pytest.raises(ConditionViolated):
            build_design(parse_scenario(text))

    def test_use_admittance_takes_compliant_subsystem_from_admittance(self):
        text = bundled_text("two_link_time_varying").replace(
            "safety_damping = [50.0, 50.0]", "safety_damping = [50.0, 50.0]\nuse_admittance = true"
        )
        _, A_a, models = build_subsystems(parse_scenario(text))
        assert np.array_equal(models.A1, A_a)

    def test_use_admittance_rejects_coupled_admittance(self):
        text = bundled_text("two_link_time_varying").replace(
            "safety_damping = [50.0, 50.0]", "safety_damping = [50.0, 50.0]\nuse_admittance = true"
        )
        scenario = parse_scenario(text)
        coupled = dataclasses.replace(
            scenario.admittance,
            damping=((15.0, 1.0), (1.0, 15.0)),
        )
        with pytest.raises(StructureMismatch):
            build_subsystems(dataclasses.replace(scenario, admittance=coupled))


def test_log_columns_layout():
    cols = log_columns(2, 2)
    assert len(cols) == 54
    assert cols[:3] == ["t", "xi_1", "xi_2"]
    assert cols[cols.index("p") - 4 :][:4] == ["ea_1", "ea_2", "ea_3", "ea_4"]
    assert cols[-1] == "d"
    assert len(log_columns(1, 1)) == 26


class TestShortRuns:
    def test_starts_at_rest_on_desired_pose(self):
        scenario = load_scenario("two_link_time_varying").with_overrides(duration=0.2)
        log = run_scenario(scenario)
        assert len(log) == scenario.steps + 1
        assert np.allclose(log.block("xi")[0], [0.1, 0.2])
        assert np.allclose(log.block("xi")[-1], [0.1, 0.2], atol=1e-9)
        assert np.all(log.column("p") == 1)

    def test_same_seed_same_log(self):
        scenario = load_scenario("two_link_time_varying").with_overrides(duration=0.05)
        a = run_scenario(scenario)
        b = run_scenario(scenario)
        assert np.array_equal(a.data, b.data)

    def test_same_seed_same_csv_bytes(self, tmp_path):
        scenario = load_scenario("two_link_time_varying").with_overrides(duration=0.05)
        first = write_trajectory(run_scenario(scenario), tmp_path / "a.csv")
        second = write_trajectory(run_scenario(scenario), tmp_path / "b.csv")
        assert first.read_bytes() == second.read_bytes()

    def test_halving_dt_barely_moves_trajectory(self):
        text = fast_contact_text().replace("amplitude = [1.5, 0.0]", "amplitude = [0.3, 0.0]")
        scenario = parse_scenario(text).with_overrides(duration=2.0)
        coarse = run_scenario(scenario.with_overrides(dt=0.002))
        fine = run_scenario(scenario)
        assert len(fine) == 2 * len(coarse) - 1
        for prefix in ("xi", "xi_dot", "xi_r", "u"):
            gap = np.max(np.abs(fine.block(prefix)[::2] - coarse.block(prefix)))
            assert gap < 1e-4, prefix

    def test_divergence_is_reported(self, monkeypatch):
        monkeypatch.setattr(simulator, "DIVERGENCE_LIMIT", 1e-9)
        scenario = load_scenario("two_link_time_varying").with_overrides(duration=0.01)
        with pytest.raises(NumericalDivergence):
            run_scenario(scenario)


class TestContact:
    def test_reference_switches_and_stays_safe(self, contact_runs):
        proposed, _ = contact_runs
        report = safety_report(proposed)
        assert report.switches > 0
        assert not report.violated
        assert report.max_phi <= 1e-3
        assert report.time_in_safety > 0

    def test_plant_tracks_reference_without_disturbance(self, contact_runs):
        proposed, _ = contact_runs
        assert np.max(np.abs(proposed.block("ea"))) < 1e-8

    def test_lyapunov_function_does_not_grow(self, contact_runs):
        proposed, _ = contact_runs
        records = lyapunov_trace(proposed.t, proposed.column("V"))
        assert max(r.Vdot_observed for r in records) < 1e-6

    def test_baseline_stays_within_its_tolerance(self, contact_runs):
        _, baseline = contact_runs
        report = safety_report(baseline)
        assert baseline.controller == "invariance_baseline"
        assert report.tolerance == pytest.approx(1e-2)
        assert not report.violated
        assert np.any(baseline.column("p") == 2)

    def test_baseline_chatters_more_than_switched_reference(self, contact_runs):
        proposed, baseline = contact_runs
        assert compute_metrics(baseline).tv_u > compute_metrics(proposed).tv_u


def predicted_lyapunov_rate(log, design) -> np.ndarray:
    """Per-step mean of 1/2 e_a^T (A_p^T P + P A_p) e_a with p held over the step."""
    P = design.gains.P
    S = {p: A.T @ P + P @ A for p, A in ((1, design.models.A1), (2, design.models.A2))}
    ea = log.block("ea")
    held = log.column("p")[:-1].astype(int)
    start = np.array([0.5 * e @ S[p] @ e for e, p in zip(ea[:-1], held, strict=True)])
    end = np.array([0.5 * e @ S[p] @ e for e, p in zip(ea[1:], held, strict=True)])
    return 0.5 * (start + end)


class TestAdaptation:
    @pytest.fixture(scope="class")
    def offset_run(self):
        text = fast_contact_text().replace(
            "rates = [10.0, 8.0]", "rates = [10.0, 8.0]\noffset = 0.5"
        )
        scenario = parse_scenario(text)
        design = build_design(scenario)
        return run_scenario(scenario, design), design

    def test_lyapunov_rate_matches_quadratic_form(self, offset_run):
        log, design = offset_run
        observed = np.diff(log.column("V")) / np.diff(log.t)
        predicted = predicted_lyapunov_rate(log, design)
        moving = np.linalg.norm(log.block("ea")[1:], axis=1) > 1e-3
        assert np.count_nonzero(moving) >= 50
        gap = np.abs(observed - predicted)[moving]
        assert np.all(gap <= 0.1 * np.abs(predicted[moving]) + 1e-8)
        assert np.max(observed) < 1e-6

    def test_lyapunov_value_starts_from_gain_offset(self, offset_run):
        log, _ = offset_run
        # 1/2 * 2 gains * 4 columns * 0.25 * (1/10 + 1/8)
        V = log.column("V")
        assert V[0] == pytest.approx(0.225)
        assert V[-1] < V[0]


class TestFullHorizon:
    def test_time_varying_bound_holds(self):
        scenario = load_scenario("two_link_time_varying")
        design = build_design(scenario)
        log = run_scenario(scenario, design)
        shrunk = np.array([design.box.shrunk_bound(t) for t in log.t])
        assert np.max(np.abs(log.block("xi_r")) - shrunk) <= 1e-3
        report = safety_report(log)
        assert not report.violated
        assert report.max_h[0] <= 1e-3

    def test_error_indices_on_comparison_scenario(self):
        scenario = load_scenario("two_link_comparison").with_overrides(dt=0.002)
        record = compute_metrics(run_scenario(scenario), scenario.metrics.channel)
        assert record.channel == "1"
        assert record.switches == 0
        assert 0.8 * 0.4889 <= record.indices.ise <= 1.2 * 0.4889
        assert 0.8 * 4.9256 <= record.indices.iae <= 1.2 * 4.9256

    def test_single_link_with_observer_stays_inside_bound(self):
        log = run_scenario(load_scenario("single_link_hw"))
        report = safety_report(log)
        assert report.switches > 0
        assert not report.violated
        assert np.max(np.abs(log.column("xi_1"))) <= 0.25 + 0.005
        plateau = np.searchsorted(log.t, 10.0)
        fhat, f = log.column("fhat_1")[plateau], log.column("f_1")[plateau]
        assert fhat == pytest.approx(f, abs=1e-2)

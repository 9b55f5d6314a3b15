import math

import numpy as np
import pytest

from sphereflow import estimate_harness as eh
from sphereflow import flow_engine
from sphereflow.errors import PreconditionViolation


def series_arrays(run):
    s = run["series"]
    return s, s.checkpoints, run["outcome"]


class TestFiniteTimeChecks:
    def test_parallel_all_pass(self, parallel_run):
        series, ckpts, outcome = series_arrays(parallel_run)
        a = series.a_resolved
        checks = eh.run_applicable_checks(series, ckpts, outcome.kind, a,
                                          T_est=outcome.T_est, z_est=outcome.z_est)
        assert [c.name for c in checks] == list(eh.FINITE_TIME_CHECKS)
        for c in checks:
            assert c.verdict, f"{c.name}: min_margin={c.min_margin}"

    def test_sandwich_saturated_from_below_on_parallel(self, parallel_run):
        series, _, outcome = series_arrays(parallel_run)
        chk = eh.check_length_sandwich(series, outcome.T_est, series.a_resolved)
        # equality family: lower bound tight at every record
        t = series.column("t")
        L = series.column("L")
        low = 2 * math.pi * np.sqrt(np.maximum(1 - np.exp(-2 * (outcome.T_est - t)), 0.0))
        assert np.max(np.abs(L - low) / L) < 0.01
        assert chk.verdict

    def test_perturbed_parallel_all_pass(self, perturbed_parallel_run):
        series, ckpts, outcome = series_arrays(perturbed_parallel_run)
        checks = eh.run_applicable_checks(series, ckpts, outcome.kind,
                                          series.a_resolved, T_est=outcome.T_est,
                                          z_est=outcome.z_est)
        for c in checks:
            assert c.verdict, f"{c.name}: min_margin={c.min_margin}"

    def test_margins_reproducible(self, parallel_run):
        series, ckpts, outcome = series_arrays(parallel_run)
        a = series.a_resolved
        first = eh.check_chord_arc(series, ckpts, a)
        second = eh.check_chord_arc(series, ckpts, a)
        assert np.array_equal(first.margins, second.margins)

    def test_roundness_rejects_early_shapes(self, perturbed_parallel_run):
        # no spurious early pass: at t = 0 the rescaled space curvature is far
        # from 1 even though it settles within 5% by the final checkpoint
        series, ckpts, outcome = series_arrays(perturbed_parallel_run)
        chk = eh.check_roundness(series, ckpts, outcome.T_est, outcome.z_est)
        assert chk.verdict
        assert chk.margins[0] < 0.0  # first checkpoint deviation above 5%
        assert chk.details["final_max_dev"] <= 0.05

    def test_curvature_consistency_with_roundness(self, parallel_run):
        # bound + sandwich imply the rescaled curvature cap
        series, ckpts, outcome = series_arrays(parallel_run)
        bound_chk = eh.check_curvature_bound(series, series.a_resolved)
        sandwich = eh.check_length_sandwich(series, outcome.T_est, series.a_resolved)
        round_chk = eh.check_roundness(series, ckpts, outcome.T_est, outcome.z_est)
        assert bound_chk.verdict and sandwich.verdict
        a = series.a_resolved
        cap = math.sqrt((1 + 2 * a * a / math.pi ** 2) * (1 + 0.02)) / (1 - 0.01)
        assert 1.0 + round_chk.details["final_max_dev"] <= cap + 0.01


class TestNegativeControls:
    def test_halved_a_fails_at_start(self, perturbed_parallel_run):
        series, ckpts, _ = series_arrays(perturbed_parallel_run)
        chk = eh.check_chord_arc(series, ckpts, series.a_resolved / 2.0)
        assert not chk.verdict
        assert chk.worst_step == 0

    def test_synthetic_sandwich_violation(self):
        T = 1.0
        t = np.linspace(0.0, 0.9, 200)
        L = 2 * math.pi * np.sqrt(1 - np.exp(-2 * (T - t))) * 0.95  # 5% below lower bound
        series = flow_engine.DiagnosticsSeries()
        for k, (tk, Lk) in enumerate(zip(t, L)):
            series.records.append(flow_engine.DiagnosticsRecord(
                step=k, t=float(tk), tau=0.0, L=float(Lk), max_abs_kappa=1.0,
                min_Z=math.nan, dLdt_obs=math.nan, curv_margin=0.0))
        chk = eh.check_length_sandwich(series, T, 0.5)
        assert not chk.verdict

    def test_corrupted_tau_fails_bracket(self, parallel_run):
        series, _, outcome = series_arrays(parallel_run)
        bad = flow_engine.DiagnosticsSeries(records=[
            flow_engine.DiagnosticsRecord(
                step=r.step, t=r.t, tau=r.tau * 1.05, L=r.L,
                max_abs_kappa=r.max_abs_kappa, min_Z=r.min_Z,
                dLdt_obs=r.dLdt_obs, curv_margin=r.curv_margin)
            for r in series.records])
        chk = eh.check_tau_bracket(bad, outcome.T_est, series.a_resolved)
        assert not chk.verdict

    def test_inflated_curvature_fails_bound(self, parallel_run):
        series, _, _ = series_arrays(parallel_run)
        bad = flow_engine.DiagnosticsSeries(records=[
            flow_engine.DiagnosticsRecord(
                step=r.step, t=r.t, tau=r.tau, L=r.L,
                max_abs_kappa=r.max_abs_kappa * 1.2 + 0.5, min_Z=r.min_Z,
                dLdt_obs=r.dLdt_obs, curv_margin=r.curv_margin)
            for r in series.records])
        chk = eh.check_curvature_bound(bad, series.a_resolved)
        assert not chk.verdict


class TestGreatCircleChecks:
    def test_perturbed_equator_passes(self, perturbed_equator_run):
        series, ckpts, outcome = series_arrays(perturbed_equator_run)
        assert outcome.kind == "great_circle"
        chk = eh.check_great_circle(series)
        assert chk.verdict
        assert chk.details["fitted_slope"] <= eh.GC_SLOPE_MAX

    def test_full_great_circle_suite(self, perturbed_equator_run):
        series, ckpts, outcome = series_arrays(perturbed_equator_run)
        checks = eh.run_applicable_checks(series, ckpts, outcome.kind,
                                          series.a_resolved)
        assert [c.name for c in checks] == list(eh.GREAT_CIRCLE_CHECKS)
        for c in checks:
            assert c.verdict, f"{c.name}: min_margin={c.min_margin}"

    def test_geodesic_run_trivially_consistent(self):
        from sphereflow.config import GeneratorSpec, RunConfig
        cfg = RunConfig(generator=GeneratorSpec(kind="great_circle"), n=128,
                        dt=1e-4, t_max=0.05, checkpoint_every=20)
        series, outcome = flow_engine.run(cfg)
        checks = eh.run_applicable_checks(series, series.checkpoints,
                                          outcome.kind, series.a_resolved)
        for c in checks:
            assert c.verdict, f"{c.name}: min_margin={c.min_margin}"

    def test_finite_time_series_rejected(self, parallel_run):
        series, _, _ = series_arrays(parallel_run)
        with pytest.raises(PreconditionViolation):
            eh.check_great_circle(series)

    def test_equator_trivially_passes(self):
        from sphereflow.config import GeneratorSpec, RunConfig
        cfg = RunConfig(generator=GeneratorSpec(kind="great_circle"), n=128,
                        dt=1e-4, t_max=0.05)
        series, outcome = flow_engine.run(cfg)
        chk = eh.check_great_circle(series)
        assert chk.verdict and math.isnan(chk.details["fitted_slope"])


def test_decay_fit_fields():
    fit = eh.decay_fit(a=1.5, T_est=1.0)
    assert 0.0 < fit.delta <= 1.0
    assert abs(fit.delta - 1.0 / (1.0 + 2 * 1.5 ** 2 / math.pi ** 2)) < 1e-15
    expect_c = (2 * 1.5 ** 2 / (4 * math.pi ** 2)) * math.expm1(2.0) ** (-fit.delta)
    assert abs(fit.C_const - expect_c) < 1e-15
    assert eh.decay_fit(0.0, 1.0).delta == 1.0


def test_bound_check_serialization(parallel_run):
    series = parallel_run["series"]
    chk = eh.check_curvature_bound(series, series.a_resolved)
    d = chk.to_dict()
    assert set(d) == {"check", "verdict", "min_margin", "tolerance", "worst_step"}
    assert d["verdict"] == "pass"

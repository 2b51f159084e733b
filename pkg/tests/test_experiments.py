import numpy as np
import pytest

from ggp.errors import ValidationError
from ggp.experiments import (
    concentration_check,
    expected_intrinsic_scale,
    run_clt,
    run_gumbel,
    run_intensity,
    run_moments,
    run_slln_trend,
    run_tails,
    run_vertex_correspondence,
)
from ggp.hull import convex_hull
from ggp.params import validate_params
from ggp.sampling import RngStream, ScaledWindow, sample_polytope_input


def record_key(records):
    return [
        (r.experiment, r.lam, r.replication, tuple(sorted(r.metrics.items())))
        for r in records
    ]


class TestGumbelRunner:
    def test_preconditions(self):
        with pytest.raises(ValidationError):
            run_gumbel(0, 2, 50, 500, seed=1)
        with pytest.raises(ValidationError):
            run_gumbel(0, 2, 1000, 50, seed=1)

    def test_deterministic_records(self):
        a = run_gumbel(0, 1, 1000, 200, seed=7)
        b = run_gumbel(0, 1, 1000, 200, seed=7)
        assert record_key(a.records) == record_key(b.records)

    def test_worker_count_invariance(self):
        a = run_gumbel(0, 1, 1000, 120, seed=9, workers=1)
        b = run_gumbel(0, 1, 1000, 120, seed=9, workers=2)
        assert record_key(a.records) == record_key(b.records)

    def test_ks_decreases_with_n(self):
        # Gumbel distance shrinks as the block size grows
        ks = {}
        for n in (10**3, 10**5):
            runs = [run_gumbel(0, 2, n, 2000, seed=100 + j).records[-1].metrics["ks"]
                    for j in range(3)]
            ks[n] = np.median(runs)
        assert ks[10**5] < ks[10**3]


class TestMomentsRunner:
    def test_reps_precondition(self):
        grid = [validate_params(2, 0, 2, 100.0)]
        with pytest.raises(ValidationError):
            run_moments(grid, 50, seed=1)

    def test_cross_oracle_tiny_intensity(self):
        # E[f0] from the runner pipeline vs an independent direct loop
        lam = 20.0
        grid = [validate_params(2, 0, 2, lam)]
        result = run_moments(grid, 2000, seed=11)
        f0 = [r.metrics["f0"] for r in result.records
              if r.replication >= 0 and not r.metrics.get("skipped")]
        pipeline_mean = np.mean(f0)
        pipeline_se = np.std(f0, ddof=1) / np.sqrt(len(f0))
        rng = np.random.default_rng(999)
        direct = []
        for _ in range(10**5):
            n = rng.poisson(lam)
            if n < 3:
                continue
            pts = rng.standard_normal((n, 2))
            direct.append(len(convex_hull(pts).vertices))
        direct_mean = np.mean(direct)
        direct_se = np.std(direct, ddof=1) / np.sqrt(len(direct))
        combined = np.hypot(pipeline_se, direct_se)
        assert abs(pipeline_mean - direct_mean) < 3 * combined

    def test_deterministic_and_worker_invariant(self):
        grid = [validate_params(2, 0, 2, 50.0)]
        a = run_moments(grid, 200, seed=3, workers=1)
        b = run_moments(grid, 200, seed=3, workers=2)
        assert record_key(a.records) == record_key(b.records)

    def test_expected_scale_gaussian(self):
        p = validate_params(2, 0, 2, 10**6)
        assert expected_intrinsic_scale(p, 2) == pytest.approx(
            np.pi * 2 * np.log(10**6), rel=1e-12
        )


class TestIntensityRunner:
    def test_compact_window_required(self):
        p = validate_params(2, 0, 2, 1e5)
        with pytest.raises(ValidationError):
            run_intensity(p, ScaledWindow(2.0, -np.inf, 1.0), (1, 4), 10, seed=1)

    def test_small_scale_consistency(self):
        p = validate_params(2, 0, 2, 1e5)
        window = ScaledWindow(2.0, -5.0, 1.0)
        result = run_intensity(
            p, window, (1, 3), reps=150, seed=5, mass_samples=300_000, mass_tol=0.02,
            rel_tol=0.12,
        )
        by_name = {c.name: c for c in result.checks}
        assert by_name["intensity_window_mass"].status == "PASS"
        assert by_name["intensity_limit_trend"].status == "PASS"
        assert by_name["intensity_binned_vs_exact"].status == "PASS"


class TestTailsRunner:
    def test_monotone_and_negative_slope(self):
        p = validate_params(2, 0, 2, 1e4)
        result = run_tails(p, 1.0, [1, 2, 3], reps=600, seed=6, grid_n=21)
        by_name = {c.name: c for c in result.checks}
        assert by_name["tails_monotone"].status == "PASS"
        agg = result.records[-1].metrics
        assert agg["tail_slope"] < 0

    def test_reps_precondition(self):
        with pytest.raises(ValidationError):
            run_tails(validate_params(2, 0, 2, 1e4), 1.0, [1, 2], reps=100, seed=1)


class TestSllnRunner:
    def test_invalid_p_rejected(self):
        p = validate_params(2, 0, 2, 1.0)
        with pytest.raises(ValidationError):
            run_slln_trend(p, a=4.0, k_max=6, p=-0.5, i=2, reps=200, seed=1)

    def test_a_must_exceed_one(self):
        p = validate_params(2, 0, 2, 1.0)
        with pytest.raises(ValidationError):
            run_slln_trend(p, a=1.0, k_max=6, p=0.6, i=2, reps=200, seed=1)

    def test_threshold_value(self):
        # i=2, beta=2, d=2: threshold (4i - beta(d+3))/(4i) = (8-10)/8 = -0.25
        p = validate_params(2, 0, 2, 1.0)
        with pytest.raises(ValidationError):
            run_slln_trend(p, a=4.0, k_max=6, p=-0.25, i=2, reps=200, seed=1)


class TestConcentrationRunner:
    def test_zero_threshold_never_violates(self):
        p = validate_params(2, 0, 2, 200.0)
        result = concentration_check(p, 2000, [0.0, 1.0, 2.0], seed=8)
        by_name = {c.name: c for c in result.checks}
        assert by_name["concentration_no_violation"].status == "PASS"
        assert by_name["concentration_monotone"].status == "PASS"
        agg = next(r for r in result.records if r.replication == -1)
        assert agg.metrics["p_exceed_0"] == 1.0

    def test_reps_precondition(self):
        with pytest.raises(ValidationError):
            concentration_check(validate_params(2, 0, 2, 100.0), 500, [1.0], seed=1)


class TestVertexCorrespondence:
    def test_small_scale_rate(self):
        p = validate_params(2, 0, 2, 1e4)
        result = run_vertex_correspondence(p, 1.0, reps=10, seed=12)
        agg = next(r for r in result.records if r.replication == -1)
        assert agg.metrics["match_rate"] > 0.8


class TestCltRunner:
    def test_reps_precondition(self):
        with pytest.raises(ValidationError):
            run_clt(validate_params(2, 0, 2, 1000.0), 500, seed=1)

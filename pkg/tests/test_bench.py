"""Benchmark functions, error measure, experiment running, MSE sweeps."""
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpgrad.bench import (
    ExperimentSpec,
    central_fdm,
    err,
    fdm_row,
    mse_sweep,
    rosenbrock,
    rosenbrock_grad,
    run_experiment,
    synthetic_ms,
    synthetic_ms_grad,
    table_specs,
    trig_sum,
)
from lpgrad.errors import DomainError
from lpgrad.estimator import (
    DECORRELATE_SAMPLE,
    EstimatorConfig,
    ObjectiveFunction,
)
from lpgrad.metric import exp_corr_metric, identity_metric
from lpgrad.sampler import DirectionLaw, RadialLaw
from lpgrad.scheme import one_point, two_point_central


class TestRosenbrock:
    def test_gradient_at_origin(self):
        d = 100
        expected = np.full(d, -2.0)
        expected[-1] = 0.0
        np.testing.assert_allclose(rosenbrock_grad(np.zeros(d)), expected)

    def test_minimum(self):
        f = rosenbrock(7)
        assert f(np.ones(7)) == 0.0

    def test_origin_value(self):
        assert rosenbrock(10)(np.zeros(10)) == pytest.approx(9.0)

    def test_gradient_matches_differences(self):
        rng = np.random.default_rng(3)
        f = rosenbrock(6)
        x = rng.normal(size=6) * 0.5
        fd = central_fdm(f, x, 1e-6)
        np.testing.assert_allclose(rosenbrock_grad(x), fd, rtol=1e-6, atol=1e-4)

    def test_d1_rejected(self):
        with pytest.raises(DomainError):
            rosenbrock(1)


class TestSynthetic:
    def test_gradient_at_origin(self):
        d, m2 = 8, 3.5
        f = synthetic_ms(d, 2.0, m2)
        expected = np.zeros(d)
        expected[0::2] = m2
        np.testing.assert_allclose(f.grad(np.zeros(d)), expected)

    def test_origin_value(self):
        d = 12
        assert synthetic_ms(d, 2.0, 1.0)(np.zeros(d)) == pytest.approx(d / 2)

    def test_gradient_matches_differences(self):
        rng = np.random.default_rng(4)
        d, m1, m2 = 10, 200.0, 1e-3
        f = synthetic_ms(d, m1, m2)
        x = rng.normal(size=d) * 0.3
        fd = central_fdm(f, x, 1e-6)
        grad = synthetic_ms_grad(x, m1, m2)
        np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-6)

    def test_odd_d_rejected(self):
        with pytest.raises(DomainError):
            synthetic_ms(7, 2.0, 1.0)


class TestCentralFdm:
    def test_quadratic_exact(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(4, 4))
        a = a + a.T
        b = rng.normal(size=4)
        f = ObjectiveFunction(fun=lambda x: float(x @ a @ x + b @ x), dim=4)
        x = rng.normal(size=4)
        np.testing.assert_allclose(central_fdm(f, x, 1e-4), 2 * a @ x + b, atol=1e-8)

    def test_rosenbrock_origin(self):
        d = 10
        f = rosenbrock(d)
        fd = central_fdm(f, np.zeros(d), 1e-4)
        expected = np.full(d, -2.0)
        expected[-1] = 0.0
        np.testing.assert_allclose(fd, expected, atol=1e-6)

    def test_evaluation_count(self):
        f = rosenbrock(5)
        central_fdm(f, np.zeros(5), 1e-4)
        assert f.eval_count == 10


class TestErr:
    def test_exact_estimate(self):
        m = identity_metric(3)
        assert err(m, [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_zero_estimate(self):
        m = identity_metric(3)
        assert err(m, [1.0, 2.0, 3.0], [0.0, 0.0, 0.0]) == pytest.approx(1.0)

    def test_hand_value(self):
        m = identity_metric(2)
        got = err(m, [-2.0, 0.0], [-2.1, 0.1])
        np.testing.assert_allclose(got, math.sqrt(0.02) / 2.0, rtol=1e-12)

    def test_degenerate_reference(self):
        with pytest.raises(DomainError):
            err(identity_metric(2), [0.0, 0.0], [1.0, 1.0])

    @given(scale=st.floats(0.01, 100.0))
    @settings(max_examples=30, deadline=None)
    def test_scale_invariance(self, scale):
        m = exp_corr_metric(3, 0.5)
        gt = np.array([1.0, -2.0, 0.5])
        ge = np.array([0.9, -2.2, 0.7])
        np.testing.assert_allclose(
            err(m, scale * gt, scale * ge), err(m, gt, ge), rtol=1e-10
        )


def quick_spec(reps=3, n=12, d=6, seed=5, **cfg_kw):
    kw = dict(
        scheme=two_point_central(),
        law=DirectionLaw.sphere(3.0),
        radial=RadialLaw.uniform(0.01),
        n=n,
        sigma=0.01,
        h=1e-3,
        decorrelate=False,
    )
    kw.update(cfg_kw)
    return ExperimentSpec(
        function=trig_sum(d),
        metric=identity_metric(d),
        cfg=EstimatorConfig(**kw),
        reps=reps,
        seed=seed,
    )


class TestRunExperiment:
    def test_determinism(self):
        rows_a, _ = run_experiment(quick_spec())
        rows_b, _ = run_experiment(quick_spec())
        assert rows_a == rows_b or all(
            a.err == b.err and a.seed == b.seed for a, b in zip(rows_a, rows_b)
        )

    def test_thread_count_does_not_change_results(self):
        rows_1, _ = run_experiment(quick_spec(reps=8), threads=1)
        rows_4, _ = run_experiment(quick_spec(reps=8), threads=4)
        assert [r.err for r in rows_1] == [r.err for r in rows_4]
        assert [r.seed for r in rows_1] == [r.seed for r in rows_4]

    def test_summary_mean_is_row_mean(self):
        rows, summary = run_experiment(quick_spec(reps=7))
        np.testing.assert_allclose(
            summary["mean_err"], np.mean([r.err for r in rows]), rtol=1e-12
        )

    def test_row_echo_fields(self):
        rows, _ = run_experiment(quick_spec(reps=2))
        row = rows[0]
        assert row.function == "trig-sum"
        assert row.l == 2 and row.n == 12 and row.d == 6
        assert row.n_evals == 24
        assert row.rep == 0 and rows[1].rep == 1

    def test_failed_rep_annotates_row(self):
        d = 4
        bad = ObjectiveFunction(fun=lambda x: float("inf"), dim=d, name="bad")
        spec = ExperimentSpec(
            function=bad,
            metric=identity_metric(d),
            cfg=EstimatorConfig(
                scheme=two_point_central(),
                law=DirectionLaw.sphere(2.0),
                radial=RadialLaw.uniform(0.1),
                n=5,
                sigma=0.1,
                h=1e-2,
            ),
            reps=2,
            seed=0,
            x0=np.zeros(d),
        )
        # reference gradient needs an analytic form for a non-finite objective
        bad.grad = lambda x: np.ones(d)
        rows, summary = run_experiment(spec)
        assert summary["n_failed"] == 2
        assert all(math.isnan(r.err) and r.note for r in rows)

    def test_monotone_error_in_n(self):
        # paired reps at the two budgets of the small benchmark preset
        specs = table_specs("t2", reps=50, seed=3)
        small = replace(specs[0])  # LN = 11
        large = replace(specs[2])  # LN = 20
        small.seed = large.seed = 77
        _, s_small = run_experiment(small)
        _, s_large = run_experiment(large)
        assert s_large["mean_err"] <= s_small["mean_err"]


class TestFdmRow:
    def test_accounting_and_error(self):
        f = synthetic_ms(20, 2.0, 1.0)
        row = fdm_row(f, identity_metric(20), h=1e-4)
        assert row.n_evals == 40
        assert row.law == "central-fdm"
        assert row.err < 1e-3


class TestMseSweep:
    def test_constant_function_zero_mse(self):
        # all evaluations are equal, so both the mean-centered one-point
        # stencil and any sum-zero stencil produce exactly the zero
        # vector, which is the analytic gradient
        d = 4
        const = ObjectiveFunction(
            fun=lambda x: 7.5, dim=d, name="const", grad=lambda x: np.zeros(d)
        )
        for scheme in (two_point_central(), one_point()):
            spec = ExperimentSpec(
                function=const,
                metric=identity_metric(d),
                cfg=EstimatorConfig(
                    scheme=scheme,
                    law=DirectionLaw.sphere(2.0),
                    radial=RadialLaw.uniform(0.1),
                    n=8,
                    sigma=0.1,
                    h=1e-2,
                ),
                reps=3,
                seed=1,
            )
            points, _ = mse_sweep(spec, [8, 16], reps=3)
            assert all(m == 0.0 for _, m in points)

    def test_requires_two_sizes(self):
        with pytest.raises(DomainError):
            mse_sweep(quick_spec(), [32], reps=2)

    def test_all_trials_failing_is_fit_error(self):
        d = 3
        bad = ObjectiveFunction(
            fun=lambda x: float("nan"), dim=d, name="bad", grad=lambda x: np.ones(d)
        )
        spec = ExperimentSpec(
            function=bad,
            metric=identity_metric(d),
            cfg=EstimatorConfig(
                scheme=two_point_central(),
                law=DirectionLaw.sphere(2.0),
                radial=RadialLaw.uniform(0.1),
                n=4,
                sigma=0.1,
                h=1e-2,
            ),
            reps=2,
            seed=0,
        )
        with pytest.raises(DomainError):
            mse_sweep(spec, [4, 8], reps=2)

    def test_slope_near_inverse_n(self):
        spec = quick_spec(d=5, n=16)
        points, slope = mse_sweep(spec, [16, 32, 64, 128], reps=40)
        assert -1.4 <= slope <= -0.6

    def test_recommended_p_not_worse_than_p2(self):
        # fixed budget far below d: the tuned exponent must not lose.
        # For smooth noiseless objectives the leading-order MSE of the
        # estimator is the same for all p, so the comparison is made
        # with an allowance covering the Monte Carlo spread.
        d, n, reps = 50, 32, 300
        function = trig_sum(d)
        results = {}
        for p in (2.0, 4.0):
            spec = ExperimentSpec(
                function=function,
                metric=identity_metric(d),
                cfg=EstimatorConfig(
                    scheme=two_point_central(),
                    law=DirectionLaw.sphere(p),
                    radial=RadialLaw.uniform(d**-2.0),
                    n=n,
                    sigma=d**-2.0,
                    h=1e-4,
                ),
                reps=reps,
                seed=11,
            )
            points, _ = mse_sweep(spec, [n, 2 * n], reps=reps)
            results[p] = points[0][1]
        assert results[4.0] <= 1.2 * results[2.0]


class TestTableSpecs:
    def test_t3_cells(self):
        specs = table_specs("t3", reps=5, seed=0)
        assert [(s.cfg.scheme.l, s.cfg.n) for s in specs] == [
            (1, 101), (1, 150), (1, 200), (2, 100),
        ]
        assert all(s.cfg.decorrelate for s in specs)
        assert all(s.cfg.decorrelate_mode == DECORRELATE_SAMPLE for s in specs)
        assert specs[0].function.dim == 100
        assert specs[0].cfg.sigma == pytest.approx(1e-4)

    def test_t6_preset_constants(self):
        specs = table_specs("t6", reps=1, seed=0)
        f = specs[0].function
        assert f.m1 == 200.0 and f.m2 == 1e-3
        assert f.dim == 200

    def test_t2dep_metric(self):
        specs = table_specs("t2dep", reps=1, seed=0)
        assert not specs[0].metric.is_identity
        assert specs[0].metric_label == "exp-corr:0.5"

    def test_unknown_preset(self):
        with pytest.raises(DomainError):
            table_specs("t9")

import dataclasses
import math

import numpy as np
import pytest

from hbavg.optim import (
    AveragingScheme,
    HBParams,
    bound_envelope,
    restart_schedule,
    run,
    run_rahb,
    wahb_stepsize,
)
from hbavg.problems import ObjectiveMeta, make_diag_quadratic, make_random_quadratic


def _meta(L, mu, dim=2):
    return ObjectiveMeta.make(dim=dim, smooth_L=L, strong_mu=mu,
                              x_star=np.zeros(dim), f_star=0.0)


class TestBoundEnvelope:
    def test_convex_branch_halves_when_k_doubles(self):
        meta = _meta(10.0, 0.0)
        params = HBParams(alpha=wahb_stepsize(10.0, 0.5), beta=0.5)
        scheme = AveragingScheme.uniform()
        for k in (1, 3, 10, 777):
            once = bound_envelope(params, scheme, meta, r0=2.0, k=k)
            twice = bound_envelope(params, scheme, meta, r0=2.0, k=2 * k)
            assert twice == once / 2.0

    def test_strongly_convex_hand_form(self):
        # beta = 0, alpha = 1/(4L): (1 - mu/(8L))^k * 16 L r0^2
        L, mu, r0 = 50.0, 2.0, 3.0
        meta = _meta(L, mu)
        params = HBParams(alpha=1.0 / (4.0 * L), beta=0.0)
        for k in (0, 1, 7, 100):
            got = bound_envelope(params, AveragingScheme.linear_rate(), meta, r0, k)
            expected = (1.0 - mu / (8.0 * L)) ** k * 16.0 * L * r0**2
            assert got == pytest.approx(expected, rel=1e-14)

    def test_k_zero_strongly_convex(self):
        meta = _meta(10.0, 1.0)
        alpha = wahb_stepsize(10.0, 0.25)
        params = HBParams(alpha=alpha, beta=0.25)
        got = bound_envelope(params, AveragingScheme.linear_rate(), meta, r0=1.5, k=0)
        assert got == pytest.approx(4.0 * 0.75 * 2.25 / alpha, rel=1e-15)

    def test_stepsize_above_cap_rejected(self):
        meta = _meta(10.0, 1.0)
        cap = wahb_stepsize(10.0, 0.5)
        with pytest.raises(ValueError, match="cap"):
            bound_envelope(HBParams(alpha=2 * cap, beta=0.5),
                           AveragingScheme.linear_rate(), meta, r0=1.0, k=5)

    def test_convex_branch_requires_positive_k(self):
        meta = _meta(10.0, 0.0)
        params = HBParams(alpha=wahb_stepsize(10.0, 0.5), beta=0.5)
        with pytest.raises(ValueError, match="k >= 1"):
            bound_envelope(params, AveragingScheme.uniform(), meta, r0=1.0, k=0)

    def test_scheme_mismatch_rejected(self):
        meta = _meta(10.0, 1.0)
        params = HBParams(alpha=wahb_stepsize(10.0, 0.5), beta=0.5)
        with pytest.raises(ValueError, match="linear_rate"):
            bound_envelope(params, AveragingScheme.uniform(), meta, r0=1.0, k=5)

    def test_envelope_sound_along_a_run(self, kernel_path):
        problem = make_random_quadratic(20, seed=21, spectrum_target=(1.0, 300.0))
        beta = 0.8
        alpha = wahb_stepsize(problem.meta.smooth_L, beta)
        params = HBParams(alpha=alpha, beta=beta)
        traj = run(problem, params, AveragingScheme.linear_rate(),
                   np.ones(20), iters=3000, x1_rule="one_grad_step")
        assert traj.bound_envelope is not None
        slack = 1e-9 * max(1.0, traj.f_gap_avg[0])
        assert np.all(traj.f_gap_avg <= traj.bound_envelope + slack)

    def test_envelope_column_absent_for_plain_runs(self, kernel_path):
        problem = make_diag_quadratic(1.0, [], 10.0)
        traj = run(problem, HBParams(alpha=0.05, beta=0.5), AveragingScheme.uniform(),
                   np.ones(2), iters=50)
        assert traj.bound_envelope is None  # uniform weights, mu > 0: no claim


class TestRestartSchedule:
    def test_single_stage_edge(self):
        # mu r0^2 / eps = 4  ->  tau = max(2 - 1, 1) = 1
        sched = restart_schedule(_meta(10.0, 1.0), beta=0.5, eps=1.0, r0=2.0)
        assert sched.tau == 1

    def test_ratio_1024_gives_nine_stages(self):
        sched = restart_schedule(_meta(10.0, 1.0), beta=0.5, eps=1.0, r0=32.0)
        assert sched.tau == 9

    def test_inner_iterations_formula(self):
        meta = _meta(10.0, 1.0)
        beta = 0.5
        sched = restart_schedule(meta, beta=beta, eps=1.0, r0=2.0)
        alpha = wahb_stepsize(10.0, beta)
        assert sched.inner_n == math.ceil(16.0 * (1 - beta) / (alpha * 1.0))
        assert sched.stages == ((alpha, beta),) * sched.tau

    def test_requires_strong_convexity(self):
        with pytest.raises(ValueError, match="strong_mu"):
            restart_schedule(ObjectiveMeta.make(2, 10.0, 0.0), beta=0.5, eps=1.0, r0=1.0)


class TestRunRahb:
    def test_reaches_target_and_contracts_per_stage(self, kernel_path):
        problem = make_diag_quadratic(1.0, list(np.geomspace(2.0, 40.0, 6)), 50.0)
        x0 = 3.0 * np.ones(8)
        r0 = float(np.linalg.norm(x0))
        mu = problem.meta.strong_mu
        eps = 1e-4 * mu * r0 * r0
        traj, sched = run_rahb(problem, beta=0.5, eps=eps, r0=r0, x0=x0)
        assert traj.f_gap_avg[-1] <= eps
        assert traj.meta.stage_starts == tuple(
            t * (sched.inner_n + 1) for t in range(sched.tau)
        )
        ends = [start + sched.inner_n for start in traj.meta.stage_starts]
        for t, end in enumerate(ends, start=1):
            assert traj.f_gap_avg[end] <= mu * r0 * r0 / 2 ** (t + 1)

    def test_r0_below_actual_distance_rejected(self):
        problem = make_diag_quadratic(1.0, [], 10.0)
        with pytest.raises(ValueError, match="below the actual distance"):
            run_rahb(problem, beta=0.5, eps=1e-3, r0=0.1, x0=np.ones(2))

    def test_rejects_convex_only_problems(self):
        problem = make_diag_quadratic(1.0, [], 10.0)
        relaxed = dataclasses.replace(problem, meta=problem.meta.relaxed_to_convex())
        with pytest.raises(ValueError, match="strong_mu"):
            run_rahb(relaxed, beta=0.5, eps=1e-3, r0=3.0, x0=np.ones(2))


def test_weight_total_form_of_envelope_is_sound(kernel_path):
    # the tightest certified statement divides by the accumulated weight
    # total W_K rather than its branch lower bounds
    problem = make_random_quadratic(15, seed=33, spectrum_target=(1.0, 200.0))
    beta = 0.8
    alpha = wahb_stepsize(problem.meta.smooth_L, beta)
    params = HBParams(alpha=alpha, beta=beta)
    scheme = AveragingScheme.linear_rate()
    traj = run(problem, params, scheme, np.ones(15), iters=3000,
               x1_rule="one_grad_step")
    logws = scheme.log_weights(np.arange(traj.rows), params, problem.meta.strong_mu)
    W = np.cumsum(np.exp(logws))  # representable at this scale
    bound = 4.0 * (1.0 - beta) * traj.meta.r0**2 / (alpha * W)
    slack = 1e-9 * max(1.0, traj.f_gap_avg[0])
    assert np.all(traj.f_gap_avg <= bound + slack)
    # and the branch-form column is never tighter than the W_K form
    assert np.all(bound <= traj.bound_envelope * (1 + 1e-12))

import numpy as np
import pytest

from hbavg.errors import DivergenceError
from hbavg.optim import (
    AveragingScheme,
    HBParams,
    hb_step,
    init_state,
    momentum_form_iterates,
    run,
    virtual_iterates,
)
from hbavg.problems import make_diag_quadratic, make_random_quadratic


def test_zero_momentum_reduces_to_gradient_descent():
    params = HBParams(alpha=0.3, beta=0.0)
    x0 = np.array([2.0, -1.0])
    state = init_state(x0, x0)
    grad = np.array([1.0, 4.0])
    after = hb_step(state, params, grad)
    assert np.array_equal(after.x_curr, x0 - 0.3 * grad)


def test_hand_iteration_identity_hessian():
    # f = 0.5 ||x||^2, alpha = 1, beta = 0.5, x0 = x1 = 1 per coordinate:
    # x2 = 1 - 1 + 0.5*0 = 0; x3 = 0 - 0 + 0.5*(0 - 1) = -0.5
    params = HBParams(alpha=1.0, beta=0.5)
    ones = np.ones(2)
    state = init_state(ones, ones)
    state = hb_step(state, params, ones)  # grad at x1 = x1
    assert np.array_equal(state.x_curr, np.zeros(2))
    state = hb_step(state, params, state.x_prev * 0.0)  # grad at x2 = 0
    assert np.array_equal(state.x_curr, np.array([-0.5, -0.5]))


def test_momentum_buffer_tracks_difference():
    problem = make_random_quadratic(6, seed=1, spectrum_target=(1.0, 50.0))
    params = HBParams(alpha=1.0 / 50.0, beta=0.7)
    x0 = np.ones(6)
    state = init_state(x0, x0)
    for _ in range(200):
        _, grad = problem.eval(state.x_curr)
        new = hb_step(state, params, grad)
        # m_k = x_k - x_{k+1} up to rounding
        drift = np.linalg.norm(new.m_prev - (state.x_curr - new.x_curr))
        assert drift <= 1e-12 * max(1.0, np.linalg.norm(new.m_prev))
        state = new


def test_two_point_and_momentum_forms_agree():
    problem = make_random_quadratic(10, seed=2, spectrum_target=(1.0, 100.0))
    params = HBParams(alpha=1.0 / 100.0, beta=0.9)
    x0 = 2.0 * np.ones(10)
    direct = run(problem, params, AveragingScheme.none(), x0, iters=500,
                 x1_rule="one_grad_step", record=True)
    momentum = momentum_form_iterates(problem, params, x0, 500)
    scale = np.maximum(np.linalg.norm(momentum, axis=1), 1.0)
    err = np.linalg.norm(direct.recorded.xs - momentum, axis=1) / scale
    assert np.max(err) <= 1e-12


def test_virtual_iterates_identity_and_recurrence():
    problem = make_random_quadratic(8, seed=3, spectrum_target=(1.0, 80.0))
    params = HBParams(alpha=1.0 / 80.0, beta=0.85)
    x0 = np.ones(8)
    traj = run(problem, params, AveragingScheme.none(), x0, iters=400,
               x1_rule="one_grad_step", record=True)
    xt = virtual_iterates(traj)
    assert np.array_equal(xt[0], traj.recorded.xs[0])  # m_{-1} = 0
    step = params.alpha / (1.0 - params.beta)
    resid = xt[1:] - xt[:-1] + step * traj.recorded.gs[:-1]
    scale = np.maximum(1.0, np.linalg.norm(xt[:-1], axis=1))
    assert np.max(np.linalg.norm(resid, axis=1) / scale) <= 1e-10


def test_virtual_iterates_trivial_when_beta_zero():
    problem = make_diag_quadratic(1.0, [], 4.0)
    traj = run(problem, HBParams(alpha=0.1, beta=0.0), AveragingScheme.none(),
               np.ones(2), iters=50, record=True)
    xt = virtual_iterates(traj)
    assert np.array_equal(xt, traj.recorded.xs)


def test_divergence_error_carries_position_and_norm():
    problem = make_diag_quadratic(1.0, [], 100.0)
    params = HBParams(alpha=10.0, beta=0.9)  # far outside the stable region
    state = init_state(np.ones(2), np.ones(2))
    with pytest.raises(DivergenceError) as excinfo:
        for _ in range(200):
            _, grad = problem.eval(state.x_curr)
            state = hb_step(state, params, grad)
    assert excinfo.value.k > 0
    assert excinfo.value.norm > 1e12 or not np.isfinite(excinfo.value.norm)

"""Single-step heavy-ball state transitions and analysis helpers.

The two-point form

    x_{k+1} = x_k - alpha * grad f(x_k) + beta * (x_k - x_{k-1})

is algebraically identical to the momentum form

    x_{k+1} = x_k - m_k,   m_k = beta * m_{k-1} + alpha * grad f(x_k)

with m_{-1} = 0 (so m_{k-1} = x_{k-1} - x_k throughout, taking x_{-1} = x_0).
Both are implemented; the runner uses the two-point form and carries the
momentum buffer for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError
from .params import HBParams

DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class OptState:
    """State after iterate k: current/previous iterates and m_{k-1}.

    ``avg_state`` optionally carries the runner's weighted running average
    (a log-domain accumulator); stepping never touches it.
    """

    x_curr: np.ndarray
    x_prev: np.ndarray
    m_prev: np.ndarray
    k: int
    avg_state: object | None = None


def init_state(x0: np.ndarray, x1: np.ndarray, avg_state=None) -> OptState:
    """State at k = 1 given the two starting points (m_0 = x0 - x1)."""
    x0 = np.asarray(x0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    return OptState(x_curr=x1, x_prev=x0, m_prev=x0 - x1, k=1, avg_state=avg_state)


def check_finite_iterate(x: np.ndarray, k: int) -> None:
    norm = float(np.linalg.norm(x))
    if not norm <= DIVERGENCE_NORM:
        raise DivergenceError(k, norm)


def hb_step(state: OptState, params: HBParams, grad: np.ndarray) -> OptState:
    """Advance one heavy-ball step; ``grad`` must be the gradient at
    state.x_curr.  Raises DivergenceError when the new iterate exceeds the
    divergence norm or turns non-finite."""
    x, xp = state.x_curr, state.x_prev
    x_next = x - params.alpha * grad + params.beta * (x - xp)
    m_next = params.beta * state.m_prev + params.alpha * grad
    check_finite_iterate(x_next, state.k + 1)
    return OptState(x_curr=x_next, x_prev=x, m_prev=m_next, k=state.k + 1,
                    avg_state=state.avg_state)


def momentum_form_iterates(problem, params: HBParams, x0: np.ndarray, iters: int) -> np.ndarray:
    """Iterates x_0 .. x_iters from the momentum form with m_{-1} = 0.

    The first step gives x_1 = x_0 - alpha * grad f(x_0), i.e. the
    one-grad-step initialization of the two-point form.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    m = np.zeros_like(x)
    out = np.empty((iters + 1, x.size))
    out[0] = x
    for k in range(iters):
        _, g = problem.eval(x)
        m = params.beta * m + params.alpha * g
        x = x - m
        check_finite_iterate(x, k + 1)
        out[k + 1] = x
    return out


def virtual_iterates(trajectory) -> np.ndarray:
    """Shifted sequence xtilde_k = x_k - (beta/(1-beta)) m_{k-1}.

    Not computed by the optimizer itself; consecutive values satisfy
    xtilde_{k+1} = xtilde_k - (alpha/(1-beta)) grad f(x_k) up to rounding.
    Requires a trajectory recorded with record=True.
    """
    rec = trajectory.recorded
    if rec is None:
        raise ValueError("virtual iterates need a trajectory recorded with record=True")
    beta = trajectory.meta.params.beta
    return rec.xs - (beta / (1.0 - beta)) * rec.ms

from .params import AveragingScheme, HBParams, optimal_hb_params, wahb_caps_satisfied, wahb_stepsize
from .stepper import OptState, hb_step, init_state, momentum_form_iterates, virtual_iterates
from .runner import (
    RecordedRun,
    RestartSchedule,
    RunMeta,
    Trajectory,
    bound_envelope,
    restart_schedule,
    run,
    run_rahb,
)

__all__ = [
    "HBParams",
    "AveragingScheme",
    "optimal_hb_params",
    "wahb_stepsize",
    "wahb_caps_satisfied",
    "OptState",
    "init_state",
    "hb_step",
    "momentum_form_iterates",
    "virtual_iterates",
    "Trajectory",
    "RunMeta",
    "RecordedRun",
    "RestartSchedule",
    "run",
    "run_rahb",
    "restart_schedule",
    "bound_envelope",
]

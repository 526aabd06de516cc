from .config import (
    DEFAULT_TUNE_GRID,
    ExperimentConfig,
    MethodCell,
    canonical_text,
    cell_hash,
    cell_seed,
    config_hash,
    load_config,
    resolve_params,
    resolve_scheme,
)
from .experiment import (
    CSV_HEADER,
    AllCellsDiverged,
    RunRecord,
    read_trajectory_csv,
    run_experiment,
    run_tuning,
    write_trajectory_csv,
)

__all__ = [
    "ExperimentConfig",
    "MethodCell",
    "DEFAULT_TUNE_GRID",
    "load_config",
    "canonical_text",
    "config_hash",
    "cell_hash",
    "cell_seed",
    "resolve_params",
    "resolve_scheme",
    "CSV_HEADER",
    "RunRecord",
    "AllCellsDiverged",
    "run_experiment",
    "run_tuning",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

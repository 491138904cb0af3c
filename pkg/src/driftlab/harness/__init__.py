from .config import Exp1Config, Exp2Config, Exp3Config, Exp4Config, load_config
from .experiments import run_exp1, run_exp2, run_exp3, run_exp4
from .io import RunResult, write_runs_csv, write_summary_json

__all__ = [
    "Exp1Config",
    "Exp2Config",
    "Exp3Config",
    "Exp4Config",
    "load_config",
    "run_exp1",
    "run_exp2",
    "run_exp3",
    "run_exp4",
    "RunResult",
    "write_runs_csv",
    "write_summary_json",
]

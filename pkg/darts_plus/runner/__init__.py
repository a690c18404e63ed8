from darts_plus.runner.artifacts import export_dot, read_csv, read_genotype, write_csv, write_json
from darts_plus.runner.evaluate import DiscreteNetwork, EvalConfig, EvalReport, eval_genotype
from darts_plus.runner.experiment import ExperimentConfig, parse_config
from darts_plus.runner.runner import ExperimentApplication, RunResult, load_result, run_command

__all__ = [
    "export_dot",
    "read_csv",
    "read_genotype",
    "write_csv",
    "write_json",
    "DiscreteNetwork",
    "EvalConfig",
    "EvalReport",
    "eval_genotype",
    "ExperimentConfig",
    "parse_config",
    "ExperimentApplication",
    "RunResult",
    "load_result",
    "run_command",
]

"""
Run orchestration. An ExperimentApplication creates one session per command;
a session prepares its run directory, executes the command and writes every
artifact it names in the returned RunResult.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from pydantic import BaseModel, Field

from darts_plus import __version__
from darts_plus.errors import UnImplementedError
from darts_plus.lemma import (
    alpha0_gradient_at_fixed_point,
    fixed_point_diagnostics,
    g_function,
    sigma0_of_r,
    sigma0_sensitivity,
    train_lemma_bilevel,
)
from darts_plus.logs import configure_logging, get_logger
from darts_plus.runner import artifacts
from darts_plus.runner import config as cfg
from darts_plus.runner.evaluate import eval_genotype
from darts_plus.runner.experiment import ExperimentConfig
from darts_plus.search import make_texture_dataset, run_search
from darts_plus.stopping import Criterion, build_stopper


class RunResult(BaseModel):
    command: str
    config: dict
    run_dir: str
    metrics_path: str | None = None
    artifacts: dict[str, str] = Field(default_factory=dict)
    genotype: dict | None = None
    stop_report: dict | None = None
    would_have_stopped: dict[str, int | None] = Field(default_factory=dict)
    summary: dict = Field(default_factory=dict)
    wall_time: float = 0.0
    engine_version: str = __version__
    metrics_schema_version: int = cfg.METRICS_SCHEMA_VERSION


class ExperimentSession:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.run_dir = Path(config.out_dir)
        self.artifacts: dict[str, str] = {}

    def get_logger(self) -> logging.Logger:
        return get_logger(f"runner.{self.config.command}")

    def path(self, name: str) -> Path:
        target = self.run_dir / name
        self.artifacts[name] = str(target)
        return target

    def start(self) -> None:
        self.run_dir.mkdir(parents=True, exist_ok=True)
        with open(self.path(cfg.CONFIG_ECHO_FILE), "w", encoding="utf-8") as f:
            f.write(self.config.echo())
        self.started = time.perf_counter()
        self.get_logger().info(f"run started in {self.run_dir} (seed {self.config.seed})")

    def execute(self) -> RunResult:
        raise UnImplementedError("execute", self.__class__.__name__)

    def stop(self) -> None:
        self.get_logger().info(f"run finished; artifacts in {self.run_dir}")

    def result(self, **fields) -> RunResult:
        return RunResult(
            command=self.config.command,
            config=self.config.model_dump(mode="json"),
            run_dir=str(self.run_dir),
            artifacts=dict(self.artifacts),
            wall_time=time.perf_counter() - self.started,
            **fields,
        )


class SearchSession(ExperimentSession):
    def execute(self) -> RunResult:
        c = self.config
        logger = self.get_logger()
        dataset = make_texture_dataset(
            c.data.num_samples, c.space.num_classes, c.data.image_size, c.data.noise, c.seed, "train"
        )
        stopper = build_stopper(c.stopping, c.criterion1, c.criterion2)
        records, genotype, report = run_search(c.search, dataset, stopper, c.space)

        fired = report.decision.criterion is not Criterion.BUDGET
        rows = [
            [
                r.epoch,
                r.train_loss,
                r.train_acc,
                r.val_loss,
                r.val_acc,
                r.skip_count_normal,
                r.skip_count_reduction,
                int(fired and k == len(records) - 1),
            ]
            for k, r in enumerate(records)
        ]
        metrics = artifacts.write_csv(self.path(cfg.METRICS_FILE), cfg.METRICS_COLUMNS, rows)
        if c.emit_epochs:
            artifacts.write_jsonl(self.path(cfg.EPOCHS_FILE), (r.to_json_dict() for r in records))
        artifacts.write_json(self.path(cfg.GENOTYPE_FILE), genotype.to_json_dict())
        if c.emit_dot:
            self.path(cfg.GENOTYPE_DOT_FILE).write_text(artifacts.export_dot(genotype), encoding="utf-8")
        stop_report = report.to_json_dict()
        artifacts.write_json(self.path(cfg.STOP_REPORT_FILE), stop_report)

        triggers = [epoch for epoch in report.would_have_stopped.values() if epoch is not None]
        if fired and report.decision.epoch is not None:
            triggers.append(report.decision.epoch)
        if len(triggers) >= 2:
            logger.info(f"stopping criteria fired at epochs {sorted(triggers)}, spread {max(triggers) - min(triggers)}")
        return self.result(
            metrics_path=str(metrics),
            genotype=genotype.to_json_dict(),
            stop_report=stop_report,
            would_have_stopped=dict(report.would_have_stopped),
            summary={"epochs": len(records), "final_skip_count_normal": records[-1].skip_count_normal},
        )


class EvalSession(ExperimentSession):
    def execute(self) -> RunResult:
        c = self.config
        genotype = artifacts.read_genotype(c.genotype_path)
        report = eval_genotype(genotype, c.eval, c.data, c.space, c.seed)
        artifacts.write_json(self.path(cfg.EVAL_FILE), report.to_json_dict())
        return self.result(genotype=genotype.to_json_dict(), summary=report.to_json_dict())


class LemmaTrainSession(ExperimentSession):
    def execute(self) -> RunResult:
        c = self.config
        trajectory = train_lemma_bilevel(c.lemma)
        rows = [
            [e.epoch, e.alpha0, *(w for row in e.W for w in row), *e.w_r, e.train_loss, e.val_loss]
            for e in trajectory.epochs
        ]
        metrics = artifacts.write_csv(self.path(cfg.LEMMA_TRAJECTORY_FILE), cfg.TRAJECTORY_COLUMNS, rows)
        diagnostics = fixed_point_diagnostics(trajectory.model, c.lemma).to_json_dict()
        artifacts.write_json(self.path(cfg.LEMMA_DIAGNOSTICS_FILE), diagnostics)
        self.get_logger().info(
            f"cos(w_r, e) {diagnostics['cos_wr_e']:.5f}, eta {diagnostics['eta']:.5f} "
            f"(target {diagnostics['target_eta']:.5f})"
        )
        return self.result(metrics_path=str(metrics), summary=diagnostics)


class LemmaSigma0Session(ExperimentSession):
    def execute(self) -> RunResult:
        s = self.config.sweep
        sensitivity = sigma0_sensitivity(s.r_grid, s.alpha0_grid, s.alpha0, s.mu_t, s.tol)
        curve = [(r, value) for r, alpha0, value in sensitivity.rows if alpha0 == s.alpha0]
        if len(curve) != len(s.r_grid):
            curve = [(r, sigma0_of_r(r, s.alpha0, s.mu_t, s.tol)) for r in s.r_grid]
        metrics = artifacts.write_csv(self.path(cfg.SIGMA0_FILE), cfg.SIGMA0_COLUMNS, curve)
        artifacts.write_csv(self.path(cfg.SIGMA0_SENSITIVITY_FILE), cfg.SENSITIVITY_COLUMNS, sensitivity.rows)
        self.get_logger().info(
            f"sigma0 over alpha0 {s.alpha0_grid}: max relative deviation {sensitivity.max_relative_deviation:.4f}"
        )
        return self.result(
            metrics_path=str(metrics),
            summary={"max_relative_deviation": sensitivity.max_relative_deviation},
        )


def grid_cell(r: float, sigma_v: float, sigma0: float, alpha0: float, mu_t: float) -> list:
    g = g_function(r, sigma_v, alpha0, mu_t)
    grad = alpha0_gradient_at_fixed_point(r, sigma_v, alpha0, mu_t)
    agrees = (grad < 0.0) == (sigma_v > sigma0)
    return [r, sigma_v, sigma0, g, grad, agrees]


class LemmaGridSession(ExperimentSession):
    def execute(self) -> RunResult:
        s = self.config.sweep
        cells = [(r, sigma_v) for r in s.r_grid for sigma_v in s.sigma_v_grid]
        with ThreadPoolExecutor(max_workers=s.threads) as pool:
            roots = dict(zip(s.r_grid, pool.map(lambda r: sigma0_of_r(r, s.alpha0, s.mu_t, s.tol), s.r_grid)))
            # map keeps grid order whatever the completion order
            rows = list(pool.map(lambda cell: grid_cell(cell[0], cell[1], roots[cell[0]], s.alpha0, s.mu_t), cells))
        metrics = artifacts.write_csv(self.path(cfg.LEMMA_GRID_FILE), cfg.GRID_COLUMNS, rows)
        disagreements = sum(1 for row in rows if not row[-1])
        self.get_logger().info(f"lemma grid: {len(rows)} cells, {disagreements} phase disagreements")
        return self.result(metrics_path=str(metrics), summary={"cells": len(rows), "disagreements": disagreements})


class ExperimentApplication:
    sessions = {
        cfg.CMD_SEARCH: SearchSession,
        cfg.CMD_EVAL: EvalSession,
        cfg.CMD_LEMMA_TRAIN: LemmaTrainSession,
        cfg.CMD_LEMMA_SIGMA0: LemmaSigma0Session,
        cfg.CMD_LEMMA_GRID: LemmaGridSession,
    }

    def startup(self):
        configure_logging()

    def shutdown(self):
        return None

    def create_session(self, config: ExperimentConfig) -> ExperimentSession:
        return self.sessions[config.command](config)


def run_command(config: ExperimentConfig) -> RunResult:
    app = ExperimentApplication()
    app.startup()
    session = app.create_session(config)
    session.start()
    try:
        result = session.execute()
    finally:
        session.stop()
        app.shutdown()
    result.artifacts[cfg.RESULT_FILE] = str(session.run_dir / cfg.RESULT_FILE)
    (session.run_dir / cfg.RESULT_FILE).write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return result


def load_result(path: str | Path) -> RunResult:
    return RunResult.model_validate_json(Path(path).read_text(encoding="utf-8"))

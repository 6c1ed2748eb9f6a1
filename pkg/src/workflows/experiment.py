"""
Experiment orchestration: dataset -> fit -> ensemble -> episodes -> artifacts.

All artifacts land in the configured output directory under fixed names:

    dataset.csv           x1, x2, y1..yS
    weights.csv           m, log_weight, weight, ess
    episode_<name>.csv    one row per control step
    summary.csv           controller, cost, violations, infeasible_steps
    posterior.csv         x1, x2, mean, variance (optional)

Episodes may run on several threads; each writes its own file and rows are
assembled in controller order, so outputs do not depend on ``workers``.
"""

import functools
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.config.experiment import load_config
from src.config.settings import get_settings
from src.control.controller import (
    ChanceConstrainedSparseController,
    FeedbackController,
    TrackingController,
    run_episode,
)
from src.inference.dataset import (
    ReplicatedDataset,
    get_truth,
    regular_grid,
    simulate_observations,
    write_dataset_csv,
)
from src.inference.hgp import (
    HgpModel,
    ImportanceEnsemble,
    draw_ensemble,
    fit,
    predict,
    weights_table,
)
from src.models.episode import EpisodeRecord, EpisodeRow, EpisodeSummary
from src.models.experiment import ExperimentConfig
from src.utils.csv_io import write_rows
from src.utils.logger import RequestLogger, get_logger


logger = get_logger(__name__)


class ExperimentResult(BaseModel):
    """Summaries and artifact paths of a completed run."""

    model_config = ConfigDict(frozen=True)

    output_dir: Path
    summaries: List[EpisodeSummary]
    artifacts: List[Path] = Field(default_factory=list)
    ess: Optional[float] = None


class ExperimentRunner:
    """
    Runs one experiment config end to end.

    Attributes:
        config: Validated experiment config
        workers: Threads for ensemble factorization and episodes
    """

    def __init__(self, config: ExperimentConfig, workers: Optional[int] = None):
        self.config = config
        self.workers = workers or get_settings().workers
        self.output_dir = Path(config.output_dir)

        logger.info(
            "Experiment runner initialized",
            output_dir=str(self.output_dir),
            workers=self.workers,
        )

    # ============================================
    # Stages
    # ============================================

    def build_dataset(self) -> ReplicatedDataset:
        """Simulate replicated observations of the configured truth."""
        block = self.config.dataset
        mean, log_variance = get_truth(block.truth)
        X = regular_grid(block.grid.lower, block.grid.upper, block.grid.points_per_axis)
        return simulate_observations(
            mean,
            log_variance,
            X,
            block.replicates,
            block.seed,
            require_proposal=self.config.control.proposed,
        )

    def fit_model(self, dataset: ReplicatedDataset) -> HgpModel:
        kernels = self.config.kernels
        return fit(dataset, kernels.f, kernels.h, jitter=self.config.inference.jitter)

    def draw(self, model: HgpModel, seed=None) -> ImportanceEnsemble:
        """Draw the ensemble; ``seed`` defaults to the configured one."""
        block = self.config.inference
        return draw_ensemble(
            model,
            block.samples,
            block.seed if seed is None else seed,
            workers=self.workers,
        )

    def _redraw_at(self, model: HgpModel, t: int) -> ImportanceEnsemble:
        # per-step stream keyed by (ensemble seed, step)
        return draw_ensemble(model, self.config.inference.samples, [self.config.inference.seed, t])

    def build_controllers(
        self,
        model: Optional[HgpModel],
        ensemble: Optional[ImportanceEnsemble],
    ) -> List[TrackingController]:
        """Proposed controller first, then one baseline per gain."""
        control = self.config.control
        controllers: List[TrackingController] = []
        if control.proposed:
            redraw = None
            if self.config.inference.redraw_per_step:
                redraw = functools.partial(self._redraw_at, model)
            controllers.append(ChanceConstrainedSparseController(ensemble, control, redraw=redraw))
        controllers.extend(FeedbackController(kappa) for kappa in control.gains)
        return controllers

    def run_episodes(self, controllers: List[TrackingController]) -> List[EpisodeRecord]:
        """Simulate every controller; results keep the input order."""
        true_f, _ = get_truth(self.config.dataset.truth)

        def run(controller: TrackingController) -> EpisodeRecord:
            record = run_episode(controller, true_f, self.config.control)
            logger.info(
                "Episode finished",
                controller=record.controller,
                cost=round(record.summary.cost, 3),
                violations=record.summary.violations,
                infeasible_steps=record.summary.infeasible_steps,
            )
            return record

        if self.workers > 1 and len(controllers) > 1:
            with ThreadPoolExecutor(max_workers=min(self.workers, len(controllers))) as pool:
                return list(pool.map(run, controllers))
        return [run(c) for c in controllers]

    # ============================================
    # Artifacts
    # ============================================

    def write_episode(self, record: EpisodeRecord) -> Path:
        path = self.output_dir / f"episode_{record.controller}.csv"
        write_rows(path, EpisodeRow.columns(), (row.values() for row in record.rows))
        return path

    def write_summary(self, records: List[EpisodeRecord]) -> Path:
        path = self.output_dir / "summary.csv"
        write_rows(path, EpisodeSummary.columns(), (r.summary.values() for r in records))
        return path

    def write_weights(self, ensemble: ImportanceEnsemble) -> Path:
        path = self.output_dir / "weights.csv"
        write_rows(path, ["m", "log_weight", "weight", "ess"], weights_table(ensemble))
        return path

    def write_posterior(self, ensemble: ImportanceEnsemble) -> Optional[Path]:
        """Posterior mean/variance on a regular grid over the training box."""
        points = self.config.inference.posterior_grid_points
        if points == 0:
            return None
        grid = self.config.dataset.grid
        Xs = regular_grid(grid.lower, grid.upper, points)
        path = self.output_dir / "posterior.csv"
        write_rows(
            path,
            ["x1", "x2", "mean", "variance"],
            (s.x + [s.mean, s.variance] for s in predict(ensemble, Xs)),
        )
        return path

    # ============================================
    # Entry point
    # ============================================

    def run(self) -> ExperimentResult:
        """
        Execute every stage and write all artifacts.

        Raises:
            HgpError: Any library error, after logging it with context
        """
        with RequestLogger("run_experiment", output_dir=str(self.output_dir)):
            self.output_dir.mkdir(parents=True, exist_ok=True)
            artifacts: List[Path] = []

            dataset = self.build_dataset()
            path = self.output_dir / "dataset.csv"
            write_dataset_csv(dataset, path)
            artifacts.append(path)

            model = ensemble = None
            if self.config.control.proposed:
                model = self.fit_model(dataset)
                ensemble = self.draw(model)
                artifacts.append(self.write_weights(ensemble))
                posterior = self.write_posterior(ensemble)
                if posterior is not None:
                    artifacts.append(posterior)

            records = self.run_episodes(self.build_controllers(model, ensemble))
            artifacts.extend(self.write_episode(r) for r in records)
            artifacts.append(self.write_summary(records))

        return ExperimentResult(
            output_dir=self.output_dir,
            summaries=[r.summary for r in records],
            artifacts=artifacts,
            ess=None if ensemble is None else ensemble.ess,
        )


def run_experiment(config_path, workers: Optional[int] = None) -> ExperimentResult:
    """
    Load a config file and run it.

    Raises:
        ConfigError: If the config is invalid
        HgpError: Propagated from any stage
    """
    config = load_config(config_path)
    return ExperimentRunner(config, workers=workers).run()

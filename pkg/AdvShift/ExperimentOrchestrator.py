import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from AdvShift.ConfigLoader import ConfigLoader, parse_taus
from AdvShift.DataGenerator import DataGenerator
from AdvShift.DataModels.Dataset import Dataset, SynthConfig
from AdvShift.DataModels.ModelParams import ModelParams
from AdvShift.DataModels.SweepSpec import SweepJob, SweepOutcome, SweepSpec
from AdvShift.Diagnostics import estimate_assumption_constants, kl_recursion_check, stationarity_trace
from AdvShift.Evaluator import per_class_errors, shift_sweep
from AdvShift.Loader import Loader
from AdvShift.Models.Checkpoint import load_checkpoint, save_checkpoint
from AdvShift.Optimize.ProjectionBaseline import projection_benchmark
from AdvShift.Trainer import AdvShiftTrainer
from Constants import (
    ABLATION_FILE,
    ABLATION_FLOOR,
    ABLATION_HEADER,
    BENCH_FILE,
    CHECKPOINT_FILE,
    CURVE_FILE,
    DIAGNOSTICS_FILE,
    EXIT_RUNTIME_ERROR,
    EXIT_SUCCESS,
    HISTORY_FILE,
    PROFILE_FILE,
    STATIONARITY_FILE,
    SWEEP_FILE,
    SWEEP_HEADER,
    user_input_exceptions,
)
from Exceptions.ConfigExceptions import ConfigError
from Exceptions.LoaderExceptions import LoaderException
from Exceptions.StatusCodeTranslator import StatusCodeExceptionTranslator

logger = logging.getLogger(__name__)


def align_to_model(data: Dataset, params: ModelParams) -> Dataset:
    """Re-labels a loaded dataset with the model's class count after checking shapes."""
    if len(data) and data.dim != params.input_dim:
        raise ConfigError("data", f"{data.dim} features, the checkpoint expects {params.input_dim}")
    if data.num_classes > params.num_classes:
        raise ConfigError("data", f"labels up to {data.num_classes - 1}, the checkpoint has {params.num_classes} classes")
    return Dataset(data.features.reshape(len(data), params.input_dim), data.labels, params.num_classes)


def run_sweep_job(job: SweepJob, train: Dataset, evaluation: Dataset, taus: Sequence[float]) -> SweepOutcome:
    """
    Trains and evaluates one grid cell. Runs in a worker process when the sweep is
    parallel, so it builds its own collaborators and never raises.
    """
    translator = StatusCodeExceptionTranslator(user_input_exceptions)
    try:
        config = ConfigLoader().build_config(job.values, num_examples=len(train))
        params, history = AdvShiftTrainer().train(config, train)
        profile = per_class_errors(params, align_to_model(evaluation, params))
        curve = shift_sweep(profile, taus)
    except Exception as e:
        code, message = translator.translate_custom_exceptions(e)
        logger.warning("Sweep job %s failed: %s", job.label, message)
        return SweepOutcome(job, [], math.nan, message, code)
    return SweepOutcome(job, list(zip(curve.taus.tolist(), curve.values.tolist())), history.min_pi_entry(), "ok", 0)


def summary_report(source: str, outcomes: List[SweepOutcome], mode: str, output: Path) -> str:
    total = len(outcomes)
    failed = [o for o in outcomes if not o.succeeded]
    success_count = total - len(failed)
    success_rate = (success_count / total) * 100 if total > 0 else 0
    lines = [
        f"SWEEP SUMMARY - {mode} Mode",
        "=" * 60,
        f"Spec: {source}",
        f"Total jobs: {total}",
        f"✓ Successful: {success_count}",
        f"✗ Failed: {len(failed)}",
        f"Success rate: {success_rate:.1f}%",
        f"Results: {output}",
    ]
    if failed:
        lines.append("\nFailed jobs:")
        lines.extend(f"  • {o.job.label}: {o.status}" for o in failed)
    return "\n".join(lines)


class ExperimentOrchestrator:
    """
    Back-end of every command: loads inputs, runs the library, writes CSV artifacts.

    Every public method returns (exit code, message) and never raises; exceptions are
    translated by StatusCodeExceptionTranslator (1 for user-input errors, 2 otherwise).

    Attributes:
        config_loader (ConfigLoader): Parses configs and sweep specs
        data_generator (DataGenerator): Reads, writes and synthesises datasets
        trainer (AdvShiftTrainer): Runs training
        loader (Loader): Writes CSV artifacts

    Methods:
        train(config_path, data_path, out_dir, seed=None) -> Tuple[int, str]
        evaluate(checkpoint_path, data_path, taus, out_dir) -> Tuple[int, str]
        sweep(spec_path, data_path, eval_path, out_dir, jobs=1, ablation=False) -> Tuple[int, str]
        project_bench(num_classes, trials, seed, out_dir) -> Tuple[int, str]
        diagnose(config_path, data_path, out_dir, seed=0, samples=20, trials=50) -> Tuple[int, str]
        generate(out_path, synth: SynthConfig) -> Tuple[int, str]
    """

    def __init__(self):
        self.config_loader = ConfigLoader()
        self.data_generator = DataGenerator()
        self.trainer = AdvShiftTrainer()
        self.loader = Loader()
        self.exception_translator = StatusCodeExceptionTranslator(user_input_exceptions)

    def train(self, config_path: str, data_path: str, out_dir: str, seed: Optional[int] = None) -> Tuple[int, str]:
        """
        Trains the configured method and writes checkpoint.json and history.csv.

        :param seed: Replaces the config's seed when given
        """
        try:
            data = self.data_generator.load_csv(data_path)
            config = self.config_loader.load(config_path, num_examples=len(data))
            if seed is not None:
                config = replace(config, seed=seed)
            out = self._prepare_out(out_dir)
            params, history = self.trainer.train(config, data)
            save_checkpoint(params, out / CHECKPOINT_FILE)
            self.loader.write_history(history, out / HISTORY_FILE)
        except Exception as e:
            return self.exception_translator.translate_custom_exceptions(e)
        final = history.epochs[-1]
        return EXIT_SUCCESS, (
            f"Trained {config.method} for {config.epochs} epochs on {len(data)} examples "
            f"(final mean loss {final.mean_loss:.4f}, KL(pi||p_emp) {final.kl_pi_pemp:.4f}); outputs in {out}"
        )

    def evaluate(self, checkpoint_path: str, data_path: str, taus: str, out_dir: str) -> Tuple[int, str]:
        """
        Writes profile.csv, curve.csv and one witness file per threshold.

        :param taus: Comma-separated increasing KL thresholds, e.g. "0,0.5,1"
        """
        try:
            thresholds = parse_taus(taus)
            params = load_checkpoint(checkpoint_path)
            data = align_to_model(self.data_generator.load_csv(data_path), params)
            out = self._prepare_out(out_dir)
            profile = per_class_errors(params, data)
            curve = shift_sweep(profile, thresholds)
            self.loader.write_profile(profile, out / PROFILE_FILE)
            self.loader.write_curve(curve, out / CURVE_FILE)
        except Exception as e:
            return self.exception_translator.translate_custom_exceptions(e)
        return EXIT_SUCCESS, (
            f"Mean error {profile.mean_value:.4f}; worst-case error {curve.values[-1]:.4f} "
            f"at tau={thresholds[-1]:g}; outputs in {out}"
        )

    def sweep(
        self,
        spec_path: str,
        data_path: str,
        eval_path: Optional[str],
        out_dir: str,
        jobs: int = 1,
        ablation: bool = False,
    ) -> Tuple[int, str]:
        """
        Runs every grid cell of a sweep spec and aggregates one row per (cell, tau) into
        sweep.csv, or ablation.csv with the min-pi column and flag when ablation is set.
        Failed cells keep their rows with a nan value and the failure as status; any
        failure makes the exit code non-zero.

        :param eval_path: Evaluation data; the training data is used when omitted
        :param jobs: Worker processes; 1 runs the grid sequentially in this process
        """
        try:
            train = self.data_generator.load_csv(data_path)
            spec = self.config_loader.load_sweep(spec_path, num_examples=len(train))
            if eval_path is None:
                logger.info("No evaluation data given, evaluating on the training data")
                evaluation = train
            else:
                evaluation = self.data_generator.load_csv(eval_path)
            if jobs < 1:
                raise ConfigError("jobs", f"must be a positive integer, got {jobs}")
            out = self._prepare_out(out_dir)
            outcomes = self._run_jobs(spec, train, evaluation, jobs)
            output = out / (ABLATION_FILE if ablation else SWEEP_FILE)
            if ablation:
                self.loader.write_rows(output, ABLATION_HEADER, self._ablation_rows(spec, outcomes))
            else:
                self.loader.write_rows(output, SWEEP_HEADER, self._sweep_rows(spec, outcomes))
        except Exception as e:
            return self.exception_translator.translate_custom_exceptions(e)
        report = summary_report(spec_path, outcomes, "Concurrent" if jobs > 1 else "Sequential", output)
        failed_codes = [o.code for o in outcomes if not o.succeeded]
        return (max(failed_codes) if failed_codes else EXIT_SUCCESS), report

    def project_bench(self, num_classes: int, trials: int, seed: int, out_dir: str) -> Tuple[int, str]:
        try:
            out = self._prepare_out(out_dir)
            report = projection_benchmark(num_classes, trials, seed)
            self.loader.write_bench(report, out / BENCH_FILE)
        except Exception as e:
            return self.exception_translator.translate_custom_exceptions(e)
        if report.trials == 0:
            return EXIT_SUCCESS, f"No trials requested; empty report written to {out / BENCH_FILE}"
        return EXIT_SUCCESS, (
            f"L={num_classes}: projection {report.median_projection_ms:.3f} ms, "
            f"mirror step {report.median_mirror_ms:.4f} ms, ratio {report.ratio:.1f}"
        )

    def diagnose(
        self, config_path: str, data_path: str, out_dir: str, seed: int = 0, samples: int = 20, trials: int = 50
    ) -> Tuple[int, str]:
        """
        Trains the configured run, then writes the assumption-constant estimates with the
        three-point check outcome (diagnostics.csv) and the per-epoch Moreau
        stationarity trace (stationarity.csv). A failed three-point check exits with 2.
        """
        try:
            data = self.data_generator.load_csv(data_path)
            config = self.config_loader.load(config_path, num_examples=len(data))
            out = self._prepare_out(out_dir)
            _, history = self.trainer.train(config, data)
            report = estimate_assumption_constants(history, data, config, samples=samples, seed=seed)
            report.stationarity = stationarity_trace(history, data, config, max(report.smoothness_hat, 1e-3))
            check = kl_recursion_check(trials, seed)
            self.loader.write_diagnostics(report, out / DIAGNOSTICS_FILE, check)
            self.loader.write_stationarity(report.stationarity, out / STATIONARITY_FILE)
        except Exception as e:
            return self.exception_translator.translate_custom_exceptions(e)
        if not check.passed:
            return EXIT_RUNTIME_ERROR, f"Three-point check failed with {check.violations} violations"
        last = report.stationarity[-1][1] if report.stationarity else math.nan
        return EXIT_SUCCESS, (
            f"R_hat {report.R_hat:.4f} (bound {report.R_bound:.2f}), G_hat {report.G_hat:.3f} "
            f"(bound {report.G_bound:.3f}), final stationarity {last:.3e}; outputs in {out}"
        )

    def generate(self, out_path: str, synth: SynthConfig) -> Tuple[int, str]:
        try:
            data = self.data_generator.gaussian_mixture_dataset(synth)
            self.data_generator.save_csv(data, out_path)
        except Exception as e:
            return self.exception_translator.translate_custom_exceptions(e)
        return EXIT_SUCCESS, f"Wrote {len(data)} examples over {synth.num_classes} classes to {out_path}"

    def _prepare_out(self, out_dir: str) -> Path:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError:
            raise LoaderException(out_dir)
        return out

    def _run_jobs(self, spec: SweepSpec, train: Dataset, evaluation: Dataset, jobs: int) -> List[SweepOutcome]:
        grid = spec.jobs()
        if jobs == 1:
            return [run_sweep_job(job, train, evaluation, spec.taus) for job in grid]
        outcomes: List[Optional[SweepOutcome]] = [None] * len(grid)
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            future_to_index = {
                executor.submit(run_sweep_job, job, train, evaluation, spec.taus): index
                for index, job in enumerate(grid)
            }
            for future in as_completed(future_to_index):
                outcomes[future_to_index[future]] = future.result()
        return outcomes

    def _sweep_rows(self, spec: SweepSpec, outcomes: List[SweepOutcome]) -> List[list]:
        rows = []
        for outcome in outcomes:
            job = outcome.job
            values = dict(outcome.worst_values)
            for tau in spec.taus:
                rows.append(
                    [job.method, job.r, job.clip, job.epsilon, job.seed, tau, values.get(tau, math.nan), outcome.status]
                )
        return rows

    def _ablation_rows(self, spec: SweepSpec, outcomes: List[SweepOutcome]) -> List[list]:
        rows = []
        for outcome in outcomes:
            flagged = not outcome.succeeded or outcome.min_pi < ABLATION_FLOOR
            rows.extend(row + [outcome.min_pi, int(flagged)] for row in self._sweep_rows(spec, [outcome]))
        return rows

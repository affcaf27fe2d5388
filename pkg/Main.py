import argparse
import logging
import sys
from typing import List, Optional, Tuple

from AdvShift.DataModels.Dataset import SynthConfig
from AdvShift.ExperimentOrchestrator import ExperimentOrchestrator
from Constants import DEFAULT_SEED, EXIT_SUCCESS, EXIT_USER_ERROR
from Exceptions.ConfigExceptions import ConfigError


def build_parser() -> argparse.ArgumentParser:
    """
    Command-line surface of the toolkit. A global --verbose switch raises logging to
    DEBUG; each subcommand maps onto one ExperimentOrchestrator method:

        train          config + data CSV -> checkpoint.json, history.csv
        eval           checkpoint + data CSV + thresholds -> profile.csv, curve.csv, witness_{i}.csv
        sweep, ablate  sweep spec + data CSV -> sweep.csv / ablation.csv, optionally in worker processes
        project-bench  number of classes -> bench.csv (projection vs closed-form step timings)
        diag           config + data CSV -> diagnostics.csv, stationarity.csv
        generate       mixture recipe -> data CSV

    :return:
        argparse.ArgumentParser: Parser whose parsed namespace carries the subcommand in .command
    """
    parser = argparse.ArgumentParser(
        description="Distributionally robust training against adversarial label shift"
    )
    parser.add_argument("--verbose", action="store_true", help="Log solver details (DEBUG level)")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Train a model from a key = value config")
    train.add_argument("--config", required=True, help="Path to the training config")
    train.add_argument("--data", required=True, help="Training data CSV (label,f0,...)")
    train.add_argument("--out", required=True, help="Output directory for checkpoint.json and history.csv")
    train.add_argument("--seed", type=int, default=None, help="Override the config's seed")

    evaluate = commands.add_parser("eval", help="Worst-case error of a checkpoint over KL thresholds")
    evaluate.add_argument("--checkpoint", required=True, help="checkpoint.json written by train")
    evaluate.add_argument("--data", required=True, help="Evaluation data CSV")
    evaluate.add_argument("--taus", default="0", help="Comma-separated increasing KL thresholds")
    evaluate.add_argument("--out", required=True, help="Output directory for profile.csv and curve.csv")

    for name, help_text in (("sweep", "Run a grid of training + evaluation jobs"),
                            ("ablate", "Run a grid and flag jobs whose weights hit the floor")):
        grid = commands.add_parser(name, help=help_text)
        grid.add_argument("--config", required=True, help="Sweep spec with comma-separated list keys")
        grid.add_argument("--data", required=True, help="Training data CSV")
        grid.add_argument("--eval-data", default=None, help="Evaluation data CSV (defaults to the training data)")
        grid.add_argument("--out", required=True, help="Output directory")
        grid.add_argument("--jobs", type=int, default=1, help="Worker processes (1 runs sequentially)")

    bench = commands.add_parser("project-bench", help="Time the KL-ball projection against one adversary step")
    bench.add_argument("--L", type=int, required=True, dest="num_classes", help="Number of classes")
    bench.add_argument("--trials", type=int, default=5, help="Number of random instances")
    bench.add_argument("--seed", type=int, default=DEFAULT_SEED)
    bench.add_argument("--out", required=True, help="Output directory for bench.csv")

    diag = commands.add_parser("diag", help="Estimate convergence constants and stationarity of a run")
    diag.add_argument("--config", required=True)
    diag.add_argument("--data", required=True)
    diag.add_argument("--out", required=True)
    diag.add_argument("--seed", type=int, default=DEFAULT_SEED)
    diag.add_argument("--samples", type=int, default=20, help="Sampled minibatches for the constants")
    diag.add_argument("--trials", type=int, default=50, help="Trials of the three-point check")

    generate = commands.add_parser("generate", help="Write a synthetic Gaussian-mixture dataset")
    generate.add_argument("--out", required=True, help="Output CSV path")
    generate.add_argument("--classes", type=int, required=True)
    generate.add_argument("--dim", type=int, required=True)
    generate.add_argument("--n", type=int, required=True)
    generate.add_argument("--separation", type=float, default=3.0)
    generate.add_argument("--noise", default="1.0", help="One noise scale, or one per class (comma-separated)")
    generate.add_argument("--marginal", default=None, help="Comma-separated label marginal (uniform if omitted)")
    generate.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Seed of the labels and noise")
    generate.add_argument(
        "--means-seed", type=int, default=None,
        help="Seed of the class means (defaults to --seed); reuse it to draw a test set from the same mixture",
    )
    return parser


def parse_floats(key: str, text: Optional[str]) -> Optional[List[float]]:
    """
    :param key: Config key named in the error message
    :param text: Comma-separated numbers, or None
    :return:
        List[float] | None: Parsed values, None when text is None
    """
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(key, f"expected comma-separated numbers, got '{text}'")


def dispatch(orchestrator: ExperimentOrchestrator, args: argparse.Namespace) -> Tuple[int, str]:
    """
    Runs the selected subcommand.

    :return: (exit code, message) from the orchestrator
    """
    if args.command == "train":
        return orchestrator.train(args.config, args.data, args.out, seed=args.seed)
    if args.command == "eval":
        return orchestrator.evaluate(args.checkpoint, args.data, args.taus, args.out)
    if args.command in ("sweep", "ablate"):
        return orchestrator.sweep(
            args.config, args.data, args.eval_data, args.out, jobs=args.jobs, ablation=args.command == "ablate"
        )
    if args.command == "project-bench":
        return orchestrator.project_bench(args.num_classes, args.trials, args.seed, args.out)
    if args.command == "diag":
        return orchestrator.diagnose(
            args.config, args.data, args.out, seed=args.seed, samples=args.samples, trials=args.trials
        )
    try:
        noise = parse_floats("noise", args.noise)
        synth = SynthConfig(
            num_classes=args.classes,
            dim=args.dim,
            n=args.n,
            separation=args.separation,
            noise=noise[0] if len(noise) == 1 else noise,
            marginal=parse_floats("marginal", args.marginal),
            seed=args.seed,
            means_seed=args.means_seed,
        )
    except ConfigError as e:
        return EXIT_USER_ERROR, str(e)
    return orchestrator.generate(args.out, synth)


def main(argv: Optional[List[str]] = None) -> None:
    """
    Entry point: parses arguments, runs the command and exits with its code
    (0 success, 1 invalid input, 2 runtime failure).

    :param argv: Arguments without the program name; sys.argv[1:] when None
    :return:
        None: Function exits the program with the command's exit code
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    code, message = dispatch(ExperimentOrchestrator(), args)
    if code == EXIT_SUCCESS:
        print(f"\n ✓ {args.command} completed: \n {message}")
    else:
        print(f"\n ✗ {args.command} failed: \n {message}")
    sys.exit(code)


if __name__ == "__main__":
    main()

## Constants file contains defaults, tolerances and artifact formats used across the toolkit.
from Exceptions.ConfigExceptions import ConfigError, ParseError, InputFileDoesNotExist
from Exceptions.LoaderExceptions import LoaderException

# Simplex numerics
SIMPLEX_TOLERANCE = 1e-9
INTERIOR_FLOOR = 1e-12

# Adversary defaults; DEFAULT_LAMBDA pairs with gamma_c = 1 / (2 * lambda) = 10
DEFAULT_RADIUS = 0.1
DEFAULT_LAMBDA = 0.05
DEFAULT_EPSILON = 1e-3
DEFAULT_CLIP = 2.0
DEFAULT_BETA = 0.999

# Model / trainer defaults
DEFAULT_ARCH = "linear"
VALID_ARCHS = ["linear", "mlp"]
DEFAULT_HIDDEN = 16
INIT_SCALE = 0.05
DEFAULT_THETA_LR = 0.1
DEFAULT_MOMENTUM = 0.9
DEFAULT_BATCH = 64
DEFAULT_EPOCHS = 20
DEFAULT_SEED = 0
DEFAULT_AGNOSTIC_LR = 0.01
VALID_METHODS = ["advshift", "erm", "balanced", "fixed", "agnostic"]
VALID_SCHEDULES = ["constant", "theory"]

# Evaluator
TILT_LAMBDA_LOWER = 1e-8
TILT_LAMBDA_UPPER = 1e8
BISECTION_TOLERANCE = 1e-8
BISECTION_MAX_ITER = 200
INNER_MAX_STEP = 100.0
INNER_MAX_TOLERANCE = 1e-8
INNER_MAX_ITER = 10000

# Projection baseline
PROJECTION_RELATIVE_TOLERANCE = 1e-2
PROJECTION_MAX_ITER = 200

# Diagnostics
MOREAU_GRADIENT_TOLERANCE = 1e-6
MOREAU_MAX_ITER = 5000
ABLATION_FLOOR = 1e-6

# Exit codes
EXIT_SUCCESS = 0
EXIT_USER_ERROR = 1
EXIT_RUNTIME_ERROR = 2

# Artifact formats
CHECKPOINT_FORMAT_VERSION = 1
CHECKPOINT_FILE = "checkpoint.json"
HISTORY_FILE = "history.csv"
PROFILE_FILE = "profile.csv"
CURVE_FILE = "curve.csv"
WITNESS_FILE = "witness_{index}.csv"
SWEEP_FILE = "sweep.csv"
ABLATION_FILE = "ablation.csv"
BENCH_FILE = "bench.csv"
DIAGNOSTICS_FILE = "diagnostics.csv"
STATIONARITY_FILE = "stationarity.csv"
PROFILE_HEADER = ["class_id", "error", "count", "ref_prob"]
CURVE_HEADER = ["tau", "worst_value", "witness_file"]
WITNESS_HEADER = ["class_id", "prob"]
SWEEP_HEADER = ["method", "r", "clip", "eps", "seed", "tau", "worst_value", "status"]
ABLATION_HEADER = SWEEP_HEADER + ["min_pi", "flagged"]
BENCH_HEADER = ["L", "trials", "median_projection_ms", "median_mirror_ms", "ratio"]
STATIONARITY_HEADER = ["epoch", "moreau_stationarity"]
DIAGNOSTICS_HEADER = ["key", "value"]

# Config keys accepted by the key = value loader
VALID_CONFIG_KEYS = [
    "method",
    "r",
    "gamma_c",
    "lambda",
    "eta_pi",
    "epsilon",
    "clip",
    "beta",
    "theta_lr",
    "momentum",
    "batch",
    "epochs",
    "seed",
    "arch",
    "hidden",
    "fixed_pi",
    "agnostic_lr",
    "lr_decay",
    "lr_decay_every",
    "schedule",
    "record_params",
]
SWEEP_LIST_KEYS = ["methods", "r", "clip", "epsilon", "seeds", "taus"]

# Exceptions caused by user input: these exit with EXIT_USER_ERROR
user_input_exceptions = [
    ConfigError,
    ParseError,
    InputFileDoesNotExist,
    LoaderException,
]

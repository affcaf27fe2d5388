import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from AdvShift.DataModels.AdversaryState import AdversaryConfig
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.DataModels.SweepSpec import SweepSpec
from AdvShift.DataModels.TrainConfig import TrainConfig
from AdvShift.Loader import Loader
from AdvShift.Trainer import theory_total_steps
from Constants import (
    DEFAULT_CLIP,
    DEFAULT_EPOCHS,
    DEFAULT_EPSILON,
    DEFAULT_RADIUS,
    DEFAULT_SEED,
    SWEEP_LIST_KEYS,
    VALID_CONFIG_KEYS,
    VALID_SCHEDULES,
)
from Exceptions.ConfigExceptions import ConfigError, InputFileDoesNotExist, ParseError
from Exceptions.DomainExceptions import DomainError

# Grid coordinates of a sweep; they may only appear in their list form
SWEEP_GRID_KEYS = {"method", "seed", "clip", "epsilon"}


class ConfigLoader:
    """
    Reads flat `key = value` experiment files (one pair per line, `#` starts a comment)
    and turns them into validated run configurations.

    Attributes:
        valid_keys (List[str]): Keys accepted in a training config
        loader (Loader): Reads witness files named by fixed_pi

    Methods:
        load(path: str, num_examples: int | None) -> TrainConfig:
            Parses and validates a training config.

        load_sweep(path: str, num_examples: int | None) -> SweepSpec:
            Parses a sweep spec with comma-separated list keys.

        build_config(values: Dict[str, str], num_examples: int | None) -> TrainConfig:
            Converts raw string values into a TrainConfig.
    """

    def __init__(self, valid_keys: List[str] = VALID_CONFIG_KEYS, loader: Optional[Loader] = None):
        self.valid_keys = valid_keys
        self.loader = loader or Loader()

    def read_pairs(self, path: str) -> Dict[str, Tuple[str, int]]:
        """
        :param path: Config file
        :return: key -> (raw value, 1-based line number)
        """
        if not Path(path).is_file():
            raise InputFileDoesNotExist(str(path))
        pairs: Dict[str, Tuple[str, int]] = {}
        with open(path, "r") as f:
            for line_number, raw in enumerate(f, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ParseError(str(path), line_number, f"expected 'key = value', got '{line}'")
                key, value = (part.strip() for part in line.split("=", 1))
                if not key:
                    raise ParseError(str(path), line_number, "missing key before '='")
                if key in pairs:
                    raise ParseError(str(path), line_number, f"key '{key}' already set on line {pairs[key][1]}")
                pairs[key] = (value, line_number)
        return pairs

    def load(self, path: str, num_examples: Optional[int] = None) -> TrainConfig:
        """
        :param path: Training config file
        :param num_examples: Training-set size; required by the theory schedule
        """
        pairs = self.read_pairs(path)
        for key in pairs:
            if key not in self.valid_keys:
                raise ConfigError(key, "unknown key")
        values = {key: value for key, (value, _) in pairs.items()}
        if "fixed_pi" in values:
            values["fixed_pi"] = resolve_witness_path(values["fixed_pi"], Path(path).parent)
        return self.build_config(values, num_examples)

    def build_config(self, values: Dict[str, str], num_examples: Optional[int] = None) -> TrainConfig:
        """
        :param values: Raw config values by key
        :param num_examples: Training-set size; required by the theory schedule
        :return: Validated TrainConfig
        """
        adversary_fields = {}
        for key, field_name in (("r", "r"), ("lambda", "lambda_"), ("gamma_c", "gamma_c"), ("epsilon", "epsilon"),
                                ("clip", "clip"), ("beta", "beta")):
            if key in values:
                adversary_fields[field_name] = _float(key, values[key])
        adversary = AdversaryConfig(**adversary_fields)

        fields = {"adversary": adversary}
        if "method" in values:
            fields["method"] = values["method"]
        if "arch" in values:
            fields["arch"] = values["arch"]
        for key, field_name in (("theta_lr", "theta_lr"), ("momentum", "momentum"), ("agnostic_lr", "agnostic_lr"),
                                ("lr_decay", "lr_decay"), ("eta_pi", "eta_pi_override")):
            if key in values:
                fields[field_name] = _float(key, values[key])
        for key, field_name in (("batch", "batch_size"), ("epochs", "epochs"), ("seed", "seed"),
                                ("hidden", "hidden"), ("lr_decay_every", "lr_decay_every")):
            if key in values:
                fields[field_name] = _int(key, values[key])
        if "record_params" in values:
            fields["record_params"] = _bool("record_params", values["record_params"])
        if "fixed_pi" in values:
            fields["fixed_pi"] = self._fixed_distribution(values["fixed_pi"])

        schedule = values.get("schedule", "constant")
        if schedule not in VALID_SCHEDULES:
            raise ConfigError("schedule", f"must be one of {VALID_SCHEDULES}, got '{schedule}'")
        if schedule == "constant":
            return TrainConfig(**fields)
        if num_examples is None:
            raise ConfigError("schedule", "the theory schedule needs the training-set size")
        for key in ("theta_lr", "batch", "lambda", "gamma_c"):
            if key in values:
                raise ConfigError(key, "is set by the theory schedule")
        total = theory_total_steps(num_examples, fields.get("epochs", DEFAULT_EPOCHS))
        return TrainConfig.theory_schedule(total, **fields)

    def load_sweep(self, path: str, num_examples: Optional[int] = None) -> SweepSpec:
        """
        Sweep specs share the config syntax. methods, r, clip, epsilon, seeds and taus
        take comma-separated lists; every other training key is forwarded to each job.
        Every grid cell is built once here so a bad cell fails before any job runs.

        :param path: Sweep spec file
        :param num_examples: Training-set size; required when the spec uses the theory schedule
        """
        pairs = self.read_pairs(path)
        forwarded = set(self.valid_keys) - SWEEP_GRID_KEYS - set(SWEEP_LIST_KEYS)
        base = {}
        for key, (value, _) in pairs.items():
            if key in forwarded:
                base[key] = value
            elif key not in SWEEP_LIST_KEYS:
                raise ConfigError(key, "unknown sweep key" if key not in SWEEP_GRID_KEYS else "use the list form")
        if "fixed_pi" in base:
            base["fixed_pi"] = resolve_witness_path(base["fixed_pi"], Path(path).parent)
        lists = {key: value for key, (value, _) in pairs.items() if key in SWEEP_LIST_KEYS}
        methods = _split("methods", lists.get("methods", "advshift"))
        spec = SweepSpec(
            methods=methods,
            radii=[_float("r", v) for v in _split("r", lists.get("r", repr(DEFAULT_RADIUS)))],
            clips=[_float("clip", v) for v in _split("clip", lists.get("clip", repr(DEFAULT_CLIP)))],
            epsilons=[_float("epsilon", v) for v in _split("epsilon", lists.get("epsilon", repr(DEFAULT_EPSILON)))],
            seeds=[_int("seeds", v) for v in _split("seeds", lists.get("seeds", str(DEFAULT_SEED)))],
            taus=parse_taus(lists.get("taus", "0")),
            base=base,
        )
        for job in spec.jobs():
            self.build_config(job.values, num_examples=num_examples)
        return spec

    def _fixed_distribution(self, text: str) -> LabelDistribution:
        """
        fixed_pi is either comma-separated probabilities or the path of a witness file
        written by eval (class_id,prob).
        """
        if _is_number_list(text):
            return _distribution("fixed_pi", text)
        try:
            return self.loader.read_witness(text)
        except InputFileDoesNotExist:
            raise ConfigError("fixed_pi", f"'{text}' is neither a probability list nor an existing witness file")


def resolve_witness_path(text: str, base_dir: Path) -> str:
    """
    Anchors a relative fixed_pi witness path at the directory of the file that names it;
    probability lists and absolute paths are returned unchanged.
    """
    if _is_number_list(text) or Path(text).is_absolute():
        return text
    return str(base_dir / text)


def parse_taus(text: str) -> List[float]:
    """Comma-separated, strictly increasing, non-negative KL thresholds."""
    taus = [_float("taus", v) for v in _split("taus", text)]
    if any(t < 0 for t in taus):
        raise ConfigError("taus", f"thresholds must be non-negative, got {text}")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ConfigError("taus", f"thresholds must increase strictly, got {text}")
    return taus


def _split(key: str, text: str) -> List[str]:
    items = [item.strip() for item in text.split(",")]
    if not items or any(not item for item in items):
        raise ConfigError(key, f"expected a comma-separated list, got '{text}'")
    return items


def _float(key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got '{text}'")
    if not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got '{text}'")
    return value


def _int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got '{text}'")


def _bool(key: str, text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ConfigError(key, f"expected true or false, got '{text}'")


def _distribution(key: str, text: str) -> LabelDistribution:
    try:
        return LabelDistribution([_float(key, v) for v in _split(key, text)])
    except DomainError as e:
        raise ConfigError(key, e.message)


def _is_number_list(text: str) -> bool:
    try:
        for v in text.split(","):
            float(v)
    except ValueError:
        return False
    return True

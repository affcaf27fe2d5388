import json
from pathlib import Path

from AdvShift.DataModels.ModelParams import ModelParams
from Constants import CHECKPOINT_FORMAT_VERSION
from Exceptions.ConfigExceptions import InputFileDoesNotExist, ParseError
from Exceptions.DomainExceptions import ShapeError
from Exceptions.LoaderExceptions import LoaderException

CHECKPOINT_KEYS = {"format_version", "arch", "input_dim", "num_classes", "hidden", "weights"}


def save_checkpoint(params: ModelParams, path) -> None:
    """
    Writes the architecture tag, shape metadata and the flat weights as JSON.
    Floats are written with repr precision, so loading restores the exact weights.

    :param params: Parameters to persist
    :param path: Destination file (created or overwritten)
    """
    record = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "arch": params.arch,
        "input_dim": params.input_dim,
        "num_classes": params.num_classes,
        "hidden": params.hidden,
        "weights": [float(w) for w in params.weights],
    }
    try:
        with open(path, "w") as f:
            json.dump(record, f, indent=1)
    except OSError:
        raise LoaderException(path)


def load_checkpoint(path) -> ModelParams:
    """
    Reads a checkpoint written by save_checkpoint.

    :param path: Checkpoint file
    :return: The stored ModelParams
    """
    if not Path(path).is_file():
        raise InputFileDoesNotExist(str(path))
    try:
        with open(path, "r") as f:
            record = json.load(f)
    except json.decoder.JSONDecodeError as e:
        raise ParseError(str(path), e.lineno, "invalid JSON")
    if not isinstance(record, dict) or set(record.keys()) != CHECKPOINT_KEYS:
        raise ParseError(str(path), 1, f"checkpoint keys must be {sorted(CHECKPOINT_KEYS)}")
    if record["format_version"] != CHECKPOINT_FORMAT_VERSION:
        raise ParseError(str(path), 1, f"unsupported checkpoint version {record['format_version']}")
    try:
        return ModelParams(
            record["arch"],
            int(record["input_dim"]),
            int(record["num_classes"]),
            int(record["hidden"]),
            record["weights"],
        )
    except (ShapeError, TypeError, ValueError) as e:
        raise ParseError(str(path), 1, str(e))

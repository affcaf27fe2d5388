from dataclasses import dataclass
from typing import Dict

import numpy as np

from Constants import INIT_SCALE, VALID_ARCHS
from Exceptions.DomainExceptions import ShapeError


@dataclass(frozen=True, eq=False)
class ModelParams:
    """
    Parameters of a small multiclass classifier stored as one flat vector.

    Layout of the flat vector:
        linear: W (L x d) row-major, then b (L)
        mlp:    W1 (h x d), b1 (h), W2 (L x h), b2 (L), tanh hidden layer

    Attributes:
        arch (str): "linear" or "mlp".
        input_dim (int): Feature dimension d.
        num_classes (int): Number of classes L.
        hidden (int): Hidden width h (0 for the linear model).
        weights (np.ndarray): Flat read-only parameter vector.
    """

    arch: str
    input_dim: int
    num_classes: int
    hidden: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        if self.arch not in VALID_ARCHS:
            raise ShapeError(f"unknown architecture '{self.arch}'")
        if self.arch == "linear" and self.hidden != 0:
            object.__setattr__(self, "hidden", 0)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        expected = self.size_for(self.arch, self.input_dim, self.num_classes, self.hidden)
        if weights.size != expected:
            raise ShapeError(f"{self.arch} model expects {expected} weights, got {weights.size}")
        if not np.all(np.isfinite(weights)):
            raise ShapeError("model weights must be finite")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @staticmethod
    def size_for(arch: str, input_dim: int, num_classes: int, hidden: int) -> int:
        if arch == "linear":
            return num_classes * input_dim + num_classes
        return hidden * input_dim + hidden + num_classes * hidden + num_classes

    @classmethod
    def initialize(
        cls, arch: str, input_dim: int, num_classes: int, hidden: int, rng: np.random.Generator
    ) -> "ModelParams":
        """
        Draws every weight uniformly from [-INIT_SCALE, INIT_SCALE].

        :param rng: Generator from the "init" seeding stream
        """
        hidden = hidden if arch == "mlp" else 0
        size = cls.size_for(arch, input_dim, num_classes, hidden)
        return cls(arch, input_dim, num_classes, hidden, rng.uniform(-INIT_SCALE, INIT_SCALE, size))

    @classmethod
    def zeros(cls, arch: str, input_dim: int, num_classes: int, hidden: int = 0) -> "ModelParams":
        hidden = hidden if arch == "mlp" else 0
        return cls(arch, input_dim, num_classes, hidden, np.zeros(cls.size_for(arch, input_dim, num_classes, hidden)))

    def with_weights(self, weights: np.ndarray) -> "ModelParams":
        return ModelParams(self.arch, self.input_dim, self.num_classes, self.hidden, weights)

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def unpack(self) -> Dict[str, np.ndarray]:
        """
        Splits the flat vector into named weight matrices (read-only views).
        """
        d, L, h = self.input_dim, self.num_classes, self.hidden
        w = self.weights
        if self.arch == "linear":
            return {"W": w[: L * d].reshape(L, d), "b": w[L * d :]}
        offset = 0
        W1 = w[offset : offset + h * d].reshape(h, d)
        offset += h * d
        b1 = w[offset : offset + h]
        offset += h
        W2 = w[offset : offset + L * h].reshape(L, h)
        offset += L * h
        return {"W1": W1, "b1": b1, "W2": W2, "b2": w[offset:]}


@dataclass(frozen=True, eq=False)
class Example:
    """
    A single labelled example.

    Attributes:
        features (np.ndarray): Feature vector of length d.
        label (int): Class index in [0, L).
    """

    features: np.ndarray
    label: int

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=float).reshape(-1)
        if not np.all(np.isfinite(features)):
            raise ShapeError("example features must be finite")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "label", int(self.label))

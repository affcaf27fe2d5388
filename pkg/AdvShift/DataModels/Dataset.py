from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Union

import numpy as np

from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.DataModels.ModelParams import Example
from Exceptions.ConfigExceptions import ConfigError
from Exceptions.DomainExceptions import DomainError, ShapeError


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Immutable labelled sample.

    Attributes:
        features (np.ndarray): Feature matrix of shape (n, d).
        labels (np.ndarray): Integer labels of shape (n,), each in [0, num_classes).
        num_classes (int): Number of classes L.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=float)
        labels = np.array(self.labels, dtype=int).reshape(-1)
        if features.ndim != 2:
            features = features.reshape(labels.size, -1)
        if features.shape[0] != labels.size:
            raise ShapeError(f"{features.shape[0]} feature rows but {labels.size} labels")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ShapeError(f"labels must lie in [0, {self.num_classes})")
        if not np.all(np.isfinite(features)):
            raise ShapeError("features must be finite")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_examples(cls, examples: Sequence[Example], num_classes: Optional[int] = None) -> "Dataset":
        if not examples:
            return cls(np.zeros((0, 0)), np.zeros(0, dtype=int), num_classes or 0)
        features = np.vstack([ex.features for ex in examples])
        labels = np.array([ex.label for ex in examples], dtype=int)
        if num_classes is None:
            num_classes = int(labels.max()) + 1
        return cls(features, labels, num_classes)

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def examples(self) -> List[Example]:
        return [Example(x, y) for x, y in zip(self.features, self.labels)]

    @cached_property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    @cached_property
    def marginal(self) -> LabelDistribution:
        """Empirical label marginal (histogram / n)."""
        if len(self) == 0:
            raise DomainError("empty dataset has no label marginal")
        return LabelDistribution.from_counts(self.class_counts)

    def covers_all_classes(self) -> bool:
        return self.num_classes > 0 and bool(np.all(self.class_counts > 0))

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.features[indices], self.labels[indices], self.num_classes)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.num_classes == other.num_classes
            and self.features.shape == other.features.shape
            and bool(np.array_equal(self.labels, other.labels))
            and bool(np.array_equal(self.features, other.features))
        )


@dataclass(frozen=True)
class SynthConfig:
    """
    Recipe for a seeded class-conditional Gaussian mixture.

    Attributes:
        num_classes (int): Number of classes L.
        dim (int): Feature dimension d.
        n (int): Number of examples.
        separation (float): Scale of the class means (means are separation * standard normal draws).
        noise (float | sequence): Isotropic noise standard deviation, either shared or one per class.
                                  Per-class noise decouples class difficulty from class frequency.
        marginal (sequence | None): Label marginal; uniform when omitted.
        seed (int): Seed for the "data" stream that draws labels and noise.
        means_seed (int | None): Seed for the "means" stream; defaults to seed. Samples that
                                 share means_seed are drawn from the same mixture.
    """

    num_classes: int
    dim: int
    n: int
    separation: float = 3.0
    noise: Union[float, Sequence[float]] = 1.0
    marginal: Optional[Sequence[float]] = None
    seed: int = 0
    means_seed: Optional[int] = None
    noise_per_class: np.ndarray = field(init=False, repr=False, compare=False)
    label_marginal: LabelDistribution = field(init=False, repr=False, compare=False)

    @property
    def mixture_seed(self) -> int:
        return self.seed if self.means_seed is None else self.means_seed

    def __post_init__(self) -> None:
        if self.num_classes < 1 or self.dim < 1:
            raise ConfigError("num_classes", "synthetic data needs at least one class and one feature")
        if self.means_seed is not None and self.means_seed < 0:
            raise ConfigError("means_seed", f"must be non-negative, got {self.means_seed}")
        if self.n < self.num_classes:
            raise ConfigError("n", f"need n >= L, got n={self.n}, L={self.num_classes}")
        try:
            noise = np.broadcast_to(np.asarray(self.noise, dtype=float), (self.num_classes,)).copy()
        except ValueError:
            raise ConfigError("noise", f"expected one scale or {self.num_classes} scales")
        if np.any(noise < 0):
            raise ConfigError("noise", "noise scales must be non-negative")
        object.__setattr__(self, "noise_per_class", noise)
        try:
            marginal = (
                LabelDistribution.uniform(self.num_classes)
                if self.marginal is None
                else LabelDistribution(self.marginal)
            )
        except DomainError as e:
            raise ConfigError("marginal", str(e))
        if marginal.num_classes != self.num_classes:
            raise ConfigError("marginal", f"expected {self.num_classes} entries")
        object.__setattr__(self, "label_marginal", marginal)

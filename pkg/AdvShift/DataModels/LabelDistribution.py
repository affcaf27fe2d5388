from dataclasses import dataclass
from typing import Sequence

import numpy as np

from Constants import INTERIOR_FLOOR, SIMPLEX_TOLERANCE
from Exceptions.DomainExceptions import DomainError


@dataclass(frozen=True, eq=False)
class LabelDistribution:
    """
    A point on the probability simplex over L classes.

    Houses the adversarial weights, the empirical label marginal and any train / test
    label marginal. The probabilities are stored as a read-only float array.

    Attributes:
        probs (np.ndarray): Probability per class, non-negative, summing to one.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if probs.size == 0:
            raise DomainError("a label distribution needs at least one class")
        if not np.all(np.isfinite(probs)):
            raise DomainError(f"non-finite probabilities {probs}")
        if np.any(probs < 0):
            raise DomainError(f"negative probabilities {probs}")
        if abs(probs.sum() - 1.0) > SIMPLEX_TOLERANCE:
            raise DomainError(f"probabilities sum to {probs.sum():.12f}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, num_classes: int) -> "LabelDistribution":
        return cls(np.full(num_classes, 1.0 / num_classes))

    @classmethod
    def point_mass(cls, num_classes: int, label: int) -> "LabelDistribution":
        probs = np.zeros(num_classes)
        probs[label] = 1.0
        return cls(probs)

    @classmethod
    def from_counts(cls, counts: Sequence[float]) -> "LabelDistribution":
        """
        Builds the empirical distribution of a histogram.

        :param counts: Non-negative counts per class with a positive total
        :return: counts / sum(counts)
        """
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise DomainError("cannot normalise an empty histogram")
        return cls(counts / total)

    @property
    def num_classes(self) -> int:
        return int(self.probs.size)

    def is_interior(self, floor: float = INTERIOR_FLOOR) -> bool:
        return bool(np.all(self.probs >= floor))

    def require_interior(self, name: str, floor: float = INTERIOR_FLOOR) -> None:
        """
        Raises DomainError unless every entry is at least the interior floor.

        :param name: Name of the distribution used in the error message
        :param floor: Smallest admissible entry
        """
        if not self.is_interior(floor):
            raise DomainError(
                f"{name} must be interior (min entry {self.probs.min():.3e} < {floor:.0e})"
            )

    def __len__(self) -> int:
        return self.num_classes

    def __getitem__(self, index: int) -> float:
        return float(self.probs[index])

    def allclose(self, other: "LabelDistribution", atol: float = SIMPLEX_TOLERANCE) -> bool:
        return self.num_classes == other.num_classes and bool(
            np.allclose(self.probs, other.probs, rtol=0.0, atol=atol)
        )

from dataclasses import dataclass, field
from typing import List

import numpy as np

from AdvShift.DataModels.LabelDistribution import LabelDistribution
from Exceptions.DomainExceptions import DomainError, ShapeError


@dataclass(frozen=True, eq=False)
class ErrorProfile:
    """
    Per-class payoff of a trained model: error rates (in [0, 1]) or losses (non-negative).

    Attributes:
        values (np.ndarray): Payoff per class.
        reference (LabelDistribution): Label marginal the worst case is measured against.
        counts (np.ndarray): Number of evaluated examples per class.
    """

    values: np.ndarray
    reference: LabelDistribution
    counts: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        counts = np.array(self.counts, dtype=int).reshape(-1)
        if values.size != self.reference.num_classes or counts.size != values.size:
            raise ShapeError(
                f"profile lengths disagree: values {values.size}, "
                f"reference {self.reference.num_classes}, counts {counts.size}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("profile values must be finite")
        values.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "counts", counts)

    @property
    def num_classes(self) -> int:
        return int(self.values.size)

    @property
    def mean_value(self) -> float:
        """Reference-weighted mean payoff <p_ref, e>."""
        return float(np.dot(self.reference.probs, self.values))


@dataclass(frozen=True, eq=False)
class ShiftPoint:
    tau: float
    value: float
    witness: LabelDistribution


@dataclass(eq=False)
class ShiftCurve:
    """
    Worst-case payoff as a function of the KL threshold tau.

    Attributes:
        points (List[ShiftPoint]): Points with strictly increasing tau.
    """

    points: List[ShiftPoint] = field(default_factory=list)

    def append(self, tau: float, value: float, witness: LabelDistribution) -> None:
        if self.points and not tau > self.points[-1].tau:
            raise DomainError(f"thresholds must increase strictly, got {tau} after {self.points[-1].tau}")
        self.points.append(ShiftPoint(tau, value, witness))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def taus(self) -> np.ndarray:
        return np.array([p.tau for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    @property
    def witnesses(self) -> List[LabelDistribution]:
        return [p.witness for p in self.points]

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np


@dataclass(eq=False)
class DiagnosticsReport:
    """
    Measured counterparts of the constants the convergence analysis assumes.

    Attributes:
        sigma_hat (float): Largest sampled deviation of the minibatch parameter gradient from the full gradient.
        G_hat (float): Largest sampled infinity norm of the adversarial gradient.
        G_bound (float): Analytic bound clip / min p_emp on the adversarial gradient.
        lipschitz_hat (float): Largest sampled secant quotient of the weighted loss.
        smoothness_hat (float): Largest sampled secant quotient of its gradient.
        R_hat (float): Largest KL(pi_t || p_emp) in the history.
        R_bound (float): log(L / epsilon) + |log epsilon| when epsilon > 0, inf otherwise.
        stationarity (List[Tuple[int, float]]): (epoch, Moreau stationarity) trace, possibly empty.
    """

    sigma_hat: float
    G_hat: float
    G_bound: float
    lipschitz_hat: float
    smoothness_hat: float
    R_hat: float
    R_bound: float
    stationarity: List[Tuple[int, float]] = field(default_factory=list)

    def as_rows(self) -> List[Tuple[str, float]]:
        rows = [
            ("sigma_hat", self.sigma_hat),
            ("G_hat", self.G_hat),
            ("G_bound", self.G_bound),
            ("lipschitz_hat", self.lipschitz_hat),
            ("smoothness_hat", self.smoothness_hat),
            ("R_hat", self.R_hat),
            ("R_bound", self.R_bound),
        ]
        rows.extend((f"stationarity_epoch_{epoch}", value) for epoch, value in self.stationarity)
        return rows


@dataclass(eq=False)
class KLRecursionReport:
    """
    Outcome of the three-point inequality check.

    Attributes:
        passed (bool): True when no test point violated the inequality.
        trials (int): Number of sampled objectives.
        points (int): Test points per objective.
        violations (int): Number of violating test points.
        worst_gap (float): Smallest observed lhs - rhs.
        witness (dict | None): The first violating instance.
    """

    passed: bool
    trials: int
    points: int
    violations: int
    worst_gap: float
    witness: Optional[Dict[str, np.ndarray]] = None


@dataclass(eq=False)
class ProjectionBenchReport:
    """
    Median wall times of the KL-ball projection and of one closed-form adversary update.
    All timing fields are None when no trial was run.
    """

    num_classes: int
    trials: int
    median_projection_ms: Optional[float] = None
    median_mirror_ms: Optional[float] = None

    @property
    def ratio(self) -> Optional[float]:
        if self.median_projection_ms is None or not self.median_mirror_ms:
            return None
        return self.median_projection_ms / self.median_mirror_ms

import math
from dataclasses import dataclass, field
from typing import Optional

from AdvShift.DataModels.LabelDistribution import LabelDistribution
from Constants import DEFAULT_BETA, DEFAULT_CLIP, DEFAULT_EPSILON, DEFAULT_LAMBDA, DEFAULT_RADIUS
from Exceptions.ConfigExceptions import ConfigError


@dataclass(frozen=True)
class AdversaryConfig:
    """
    Hyperparameters of the label adversary.

    Attributes:
        r (float): Radius of the KL ball around the empirical label marginal, in nats.
        lambda_ (float): Proximal step scale; the KL proximity term is weighted 1 / (2 * lambda_).
        gamma_c (float): Lagrange penalty applied while the adversary is outside the ball.
                         Defaults to 1 / (2 * lambda_) so that 2 * gamma_c * lambda_ = 1.
        epsilon (float): Weight of the uniform mixture applied after every update.
        clip (float): Per-example loss clip used for the adversarial gradient only.
        beta (float): Decay of the exponential moving average of the label marginal.
    """

    r: float = DEFAULT_RADIUS
    lambda_: float = DEFAULT_LAMBDA
    gamma_c: Optional[float] = None
    epsilon: float = DEFAULT_EPSILON
    clip: float = DEFAULT_CLIP
    beta: float = DEFAULT_BETA

    def __post_init__(self) -> None:
        if self.gamma_c is None:
            object.__setattr__(self, "gamma_c", 1.0 / (2.0 * self.lambda_) if self.lambda_ > 0 else 0.0)
        if not self.r >= 0:
            raise ConfigError("r", f"radius must be non-negative, got {self.r}")
        if not (self.lambda_ > 0 and math.isfinite(self.lambda_)):
            raise ConfigError("lambda", f"must be positive and finite, got {self.lambda_}")
        if not (self.gamma_c >= 0 and math.isfinite(self.gamma_c)):
            raise ConfigError("gamma_c", f"must be non-negative and finite, got {self.gamma_c}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError("epsilon", f"must lie in [0, 1), got {self.epsilon}")
        if not self.clip > 0:
            raise ConfigError("clip", f"must be positive, got {self.clip}")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta", f"must lie in [0, 1], got {self.beta}")

    @property
    def active_alpha(self) -> float:
        """Multiplier alpha = 2 * gamma_c * lambda used while the ball constraint is violated."""
        return 2.0 * self.gamma_c * self.lambda_


@dataclass(frozen=True, eq=False)
class AdversaryState:
    """
    State of the adversary between steps.

    Attributes:
        pi (LabelDistribution): Current adversarial label weights.
        p_emp (LabelDistribution): Moving-average estimate of the empirical label marginal.
        step (int): Number of updates applied so far.
    """

    pi: LabelDistribution
    p_emp: LabelDistribution
    step: int = field(default=0)

    @classmethod
    def initial(cls, num_classes: int) -> "AdversaryState":
        uniform = LabelDistribution.uniform(num_classes)
        return cls(pi=uniform, p_emp=uniform, step=0)

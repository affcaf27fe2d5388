import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from AdvShift.DataModels.AdversaryState import AdversaryConfig
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from Constants import (
    DEFAULT_AGNOSTIC_LR,
    DEFAULT_ARCH,
    DEFAULT_BATCH,
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN,
    DEFAULT_MOMENTUM,
    DEFAULT_SEED,
    DEFAULT_THETA_LR,
    VALID_ARCHS,
    VALID_METHODS,
)
from Exceptions.ConfigExceptions import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    """
    Everything a training run needs besides the data.

    Attributes:
        method (str): advshift | erm | balanced | fixed | agnostic.
        adversary (AdversaryConfig): Adversary hyperparameters (also used by agnostic for clip / epsilon).
        theta_lr (float): Step size of the parameter optimiser.
        momentum (float): Heavy-ball momentum in [0, 1).
        batch_size (int): Minibatch size b.
        epochs (int): Number of passes over the training sample.
        seed (int): Root seed of every random stream used by the run.
        eta_pi_override (float | None): Replaces the exact proximal step 2 * lambda / (1 + alpha).
        fixed_pi (LabelDistribution | None): Reweighting distribution of the fixed baseline.
        agnostic_lr (float): Projected-ascent step of the agnostic baseline.
        arch (str): linear | mlp.
        hidden (int): Hidden width of the mlp.
        lr_decay (float): Multiplicative step decay applied every lr_decay_every epochs (1 = constant).
        lr_decay_every (int): Decay period in epochs; 0 disables decay.
        record_params (bool): Keep a parameter snapshot after every step in the history.
    """

    method: str = "advshift"
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    theta_lr: float = DEFAULT_THETA_LR
    momentum: float = DEFAULT_MOMENTUM
    batch_size: int = DEFAULT_BATCH
    epochs: int = DEFAULT_EPOCHS
    seed: int = DEFAULT_SEED
    eta_pi_override: Optional[float] = None
    fixed_pi: Optional[LabelDistribution] = None
    agnostic_lr: float = DEFAULT_AGNOSTIC_LR
    arch: str = DEFAULT_ARCH
    hidden: int = DEFAULT_HIDDEN
    lr_decay: float = 1.0
    lr_decay_every: int = 0
    record_params: bool = False

    def __post_init__(self) -> None:
        if self.method not in VALID_METHODS:
            raise ConfigError("method", f"unknown method tag '{self.method}'")
        if self.arch not in VALID_ARCHS:
            raise ConfigError("arch", f"unknown architecture '{self.arch}'")
        if not (self.theta_lr > 0 and math.isfinite(self.theta_lr)):
            raise ConfigError("theta_lr", f"must be positive, got {self.theta_lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum", f"must lie in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ConfigError("batch", f"must be a positive integer, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError("epochs", f"must be a positive integer, got {self.epochs}")
        if self.seed < 0:
            raise ConfigError("seed", f"must be non-negative, got {self.seed}")
        if self.eta_pi_override is not None and not self.eta_pi_override > 0:
            raise ConfigError("eta_pi", f"must be positive, got {self.eta_pi_override}")
        if not self.agnostic_lr > 0:
            raise ConfigError("agnostic_lr", f"must be positive, got {self.agnostic_lr}")
        if self.method == "fixed" and self.fixed_pi is None:
            raise ConfigError("fixed_pi", "the fixed method needs a reweighting distribution")
        if self.arch == "mlp" and self.hidden < 1:
            raise ConfigError("hidden", f"mlp needs a positive hidden width, got {self.hidden}")
        if not self.lr_decay > 0 or self.lr_decay_every < 0:
            raise ConfigError("lr_decay", "decay factor must be positive and period non-negative")

    @classmethod
    def theory_schedule(cls, total_steps: int, **overrides) -> "TrainConfig":
        """
        Builds the iteration-count schedule used to illustrate the convergence analysis:
        theta step T^(-3/4), batch size ceil(T^(1/2)), proximal scale lambda = T^(-1/4).
        Epochs are left to the caller; the schedule is meant for diagnostic runs only.

        :param total_steps: Number of optimisation steps T the run is planned for
        :param overrides: Any other TrainConfig field
        """
        if total_steps < 1:
            raise ConfigError("epochs", "theory schedule needs at least one step")
        adversary = overrides.pop("adversary", AdversaryConfig())
        lam = total_steps ** -0.25
        adversary = replace(adversary, lambda_=lam, gamma_c=1.0 / (2.0 * lam))
        return cls(
            adversary=adversary,
            theta_lr=total_steps ** -0.75,
            batch_size=int(math.ceil(math.sqrt(total_steps))),
            momentum=overrides.pop("momentum", 0.0),
            **overrides,
        )

    def lr_at(self, epoch: int) -> float:
        if self.lr_decay_every <= 0:
            return self.theta_lr
        return self.theta_lr * self.lr_decay ** (epoch // self.lr_decay_every)


@dataclass(frozen=True, eq=False)
class StepRecord:
    """Per-step trace entry: multiplier used, KL(pi || p_emp) before the step, optional parameters."""

    step: int
    alpha: float
    kl_pi_pemp: float
    weights: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class EpochRecord:
    """
    Summary of one epoch.

    Attributes:
        epoch (int): 1-based epoch index.
        mean_loss (float): Mean per-example training loss over the epoch's minibatches.
        class_losses (np.ndarray): Mean loss per class over the epoch (nan for unseen classes).
        pi (LabelDistribution): Weighting distribution at the end of the epoch.
        p_emp (LabelDistribution): Estimated label marginal at the end of the epoch.
        kl_pi_pemp (float): KL(pi || p_emp) at the end of the epoch.
        class_errors (np.ndarray): Per-class training error rate at the end of the epoch.
        weights (np.ndarray): Model parameters at the end of the epoch.
    """

    epoch: int
    mean_loss: float
    class_losses: np.ndarray
    pi: LabelDistribution
    p_emp: LabelDistribution
    kl_pi_pemp: float
    class_errors: np.ndarray
    weights: np.ndarray


@dataclass(eq=False)
class TrainHistory:
    """
    Ordered record of a training run: one EpochRecord per epoch and one StepRecord per step.
    """

    method: str
    epochs: List[EpochRecord] = field(default_factory=list)
    steps: List[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def pi_snapshots(self) -> List[LabelDistribution]:
        return [record.pi for record in self.epochs]

    def weight_trace(self) -> np.ndarray:
        """Parameter snapshots of every step (requires record_params)."""
        return np.vstack([s.weights for s in self.steps if s.weights is not None])

    def min_pi_entry(self) -> float:
        return float(min(record.pi.probs.min() for record in self.epochs)) if self.epochs else math.nan

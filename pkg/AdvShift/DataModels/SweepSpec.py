import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Tuple


@dataclass(frozen=True)
class SweepJob:
    """
    One (method, r, clip, epsilon, seed) cell of a sweep grid.

    Attributes:
        values (Dict[str, str]): Complete key = value mapping for the job's TrainConfig,
                                 the grid coordinates included.
    """

    method: str
    r: float
    clip: float
    epsilon: float
    seed: int
    values: Dict[str, str] = field(default_factory=dict, compare=False)

    @property
    def label(self) -> str:
        return f"{self.method}(r={self.r:g}, clip={self.clip:g}, eps={self.epsilon:g}, seed={self.seed})"


@dataclass(frozen=True)
class SweepSpec:
    """
    Parsed sweep specification: list-valued grid keys, evaluation thresholds, and the
    scalar keys forwarded unchanged to every job.
    """

    methods: List[str]
    radii: List[float]
    clips: List[float]
    epsilons: List[float]
    seeds: List[int]
    taus: List[float]
    base: Dict[str, str] = field(default_factory=dict)

    def jobs(self) -> List[SweepJob]:
        """Grid cells in method, r, clip, epsilon, seed order."""
        jobs = []
        for method, r, clip, epsilon, seed in itertools.product(
            self.methods, self.radii, self.clips, self.epsilons, self.seeds
        ):
            values = dict(self.base)
            values.update(method=method, r=repr(r), clip=repr(clip), epsilon=repr(epsilon), seed=str(seed))
            jobs.append(SweepJob(method, r, clip, epsilon, seed, values))
        return jobs


@dataclass
class SweepOutcome:
    """
    Result of one sweep job.

    Attributes:
        job (SweepJob): The grid cell.
        worst_values (List[Tuple[float, float]]): (tau, worst-case error) pairs; empty on failure.
        min_pi (float): Smallest weighting entry recorded during training (nan on failure).
        status (str): "ok" or the failure message.
        code (int): Exit code of the job (0 on success).
    """

    job: SweepJob
    worst_values: List[Tuple[float, float]]
    min_pi: float
    status: str
    code: int

    @property
    def succeeded(self) -> bool:
        return self.code == 0

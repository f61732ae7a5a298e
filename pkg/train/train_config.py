from dataclasses import dataclass, fields
from typing import Any, Callable, List

from common import config_provider
from common.config_provider import CastFn, ConfigError
from neural.loss import DEFAULT_DELTA
from neural.rmsprop import DEFAULT_DECAY, DEFAULT_EPSILON, DEFAULT_LEARNING_RATE

TRAIN_ROOT_PATH = ("train",)
REFINE_ROOT_PATH = ("refine",)


def _read_section(cls, root: List[str], casts: dict[str, Callable[[Any], Any]]):
    defaults = cls()
    values = {name: config_provider.get_value([*root, name], getattr(defaults, name), cast)
              for name, cast in casts.items()}
    try:
        return cls(**values)
    except ValueError as e:
        raise ConfigError(f"Invalid {'.'.join(root)} configuration: {e}") from e


@dataclass(frozen=True)
class TrainConfig:
    """
    DQN training schedule.  `total_batches`, `target_sync_interval`, `metrics_interval` and `checkpoint_interval`
    count trained batches; `epsilon_anneal_steps` and `snapshot_interval` count environment steps.
    `steps_per_batch` is the number of actor steps taken per trained batch in deterministic single-actor mode.
    A `checkpoint_interval` of 0 only writes the final checkpoint.
    """
    gamma: float = 0.99
    learning_rate: float = DEFAULT_LEARNING_RATE
    rms_decay: float = DEFAULT_DECAY
    rms_epsilon: float = DEFAULT_EPSILON
    huber_delta: float = DEFAULT_DELTA
    batch_size: int = 32
    total_batches: int = 1_500_000
    target_sync_interval: int = 10_000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    epsilon_anneal_steps: int = 1_000_000
    actor_count: int = 1
    snapshot_interval: int = 1_000
    steps_per_batch: int = 4
    metrics_interval: int = 100
    checkpoint_interval: int = 0
    droppath_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}.")
        if not 0.0 < self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ValueError("Require 0 < epsilon_end <= epsilon_start <= 1.")
        if not 0.0 <= self.droppath_rate <= 1.0:
            raise ValueError("droppath_rate must lie in [0, 1].")
        if min(self.batch_size, self.target_sync_interval, self.epsilon_anneal_steps, self.actor_count,
               self.snapshot_interval, self.steps_per_batch, self.metrics_interval) < 1:
            raise ValueError("Batch size, intervals, step counts and actor count must be >= 1.")
        if self.total_batches < 0 or self.checkpoint_interval < 0:
            raise ValueError("total_batches and checkpoint_interval must be >= 0.")

    @staticmethod
    def from_config() -> 'TrainConfig':
        casts = {f.name: (CastFn.to_int if f.type is int else CastFn.to_float) for f in fields(TrainConfig)}
        casts["droppath_rate"] = CastFn.to_probability
        return _read_section(TrainConfig, [*TRAIN_ROOT_PATH], casts)


@dataclass(frozen=True)
class RefineConfig:
    """
    DropPath distillation of a converged LateAcc network.  The frozen teacher is the checkpoint handed to the refine
    command; the student starts as its copy.  `corpus_epsilon` is the exploration rate of the teacher rollouts that
    generate the corpus, which is written in files of `corpus_file_size` transitions.
    """
    droppath_rate: float = 0.5
    ray_dropout_rate: float = 0.025
    refine_batches: int = 1_000_000
    corpus_size: int = 5_000_000
    corpus_epsilon: float = 0.1
    corpus_file_size: int = 500_000
    distill_all_actions: bool = False
    learning_rate: float = DEFAULT_LEARNING_RATE
    rms_decay: float = DEFAULT_DECAY
    rms_epsilon: float = DEFAULT_EPSILON
    batch_size: int = 32
    metrics_interval: int = 100

    def __post_init__(self):
        for name in ("droppath_rate", "ray_dropout_rate", "corpus_epsilon"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1].")
        if min(self.corpus_size, self.corpus_file_size, self.batch_size, self.metrics_interval) < 1:
            raise ValueError("Corpus sizes, batch size and metrics interval must be >= 1.")
        if self.refine_batches < 0:
            raise ValueError("refine_batches must be >= 0.")

    @staticmethod
    def from_config() -> 'RefineConfig':
        casts = dict()
        for f in fields(RefineConfig):
            if f.type is bool:
                casts[f.name] = CastFn.to_bool
            elif f.type is int:
                casts[f.name] = CastFn.to_int
            else:
                casts[f.name] = CastFn.to_float
        return _read_section(RefineConfig, [*REFINE_ROOT_PATH], casts)


TRAIN_CONFIG_KEYS = tuple(f.name for f in fields(TrainConfig))
REFINE_CONFIG_KEYS = tuple(f.name for f in fields(RefineConfig))

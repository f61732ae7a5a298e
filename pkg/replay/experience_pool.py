import logging
import threading
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from arena.simulator import NUM_SENSORS, Action, Observation
from common import config_provider
from common.config_provider import CastFn, ConfigError

config_root_path = ("pool",)

CONFIG_KEYS = ("capacity", "min_fill")

# a consumer gives up on a slot that keeps changing under it after this many re-reads
_MAX_READ_RETRIES = 1000


class Transition(NamedTuple):
    obs: Observation
    action: Action
    reward: float
    next_obs: Observation
    terminal: bool


class Batch(NamedTuple):
    """
    Column-wise transitions, row `i` of every field belongs to the same transition.
    """
    obs: np.ndarray  # (n, 3, rays) float32
    available: np.ndarray  # (n, 3) bool
    action: np.ndarray  # (n,) int64
    reward: np.ndarray  # (n,) float64
    next_obs: np.ndarray
    next_available: np.ndarray
    terminal: np.ndarray  # (n,) bool

    @property
    def size(self) -> int:
        return self.action.shape[0]

    def select(self, rows: np.ndarray | slice) -> 'Batch':
        return Batch(*(field[rows] for field in self))


@dataclass(frozen=True)
class PoolConfig:
    capacity: int = 1_000_000
    batch_size: int = 32
    min_fill: int = 10_000

    def __post_init__(self):
        if not self.capacity >= self.batch_size >= 1:
            raise ValueError(f"Require capacity >= batch_size >= 1, got {self.capacity}, {self.batch_size}.")
        if self.min_fill > self.capacity:
            raise ValueError(f"min_fill ({self.min_fill}) exceeds capacity ({self.capacity}).")

    @property
    def training_threshold(self) -> int:
        return max(self.min_fill, self.batch_size)

    @staticmethod
    def from_config(batch_size: int = 32) -> 'PoolConfig':
        """
        Reads the `pool` section.  The batch size is owned by the training sections and passed in.
        """
        d = PoolConfig()
        root = [*config_root_path]
        try:
            return PoolConfig(
                capacity=config_provider.get_value([*root, "capacity"], d.capacity, CastFn.to_int),
                batch_size=batch_size,
                min_fill=config_provider.get_value([*root, "min_fill"], d.min_fill, CastFn.to_int))
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f"Invalid pool configuration: {e}") from e


class ExperiencePool:

    """
    Bounded FIFO ring of transitions stored column-wise in preallocated arrays.

    Producers serialise on a lock.  The consumer samples without taking it: every slot carries a version counter
    that is odd while a producer is writing it, rows are copied and the versions re-read, and any row whose version
    was odd or changed is copied again.  Sampling is uniform with replacement over the current contents.
    """

    def __init__(self, capacity: int, rays: int, obs_dtype: np.dtype = np.float32):
        if capacity < 1 or rays < 1:
            raise ValueError("Pool capacity and ray count must be positive.")
        self._log = logging.getLogger(type(self).__name__)
        self.capacity = capacity
        self.rays = rays
        self._obs = np.zeros((capacity, NUM_SENSORS, rays), dtype=obs_dtype)
        self._available = np.zeros((capacity, NUM_SENSORS), dtype=bool)
        self._action = np.zeros(capacity, dtype=np.int64)
        self._reward = np.zeros(capacity, dtype=np.float64)
        self._next_obs = np.zeros((capacity, NUM_SENSORS, rays), dtype=obs_dtype)
        self._next_available = np.zeros((capacity, NUM_SENSORS), dtype=bool)
        self._terminal = np.zeros(capacity, dtype=bool)
        self._versions = np.zeros(capacity, dtype=np.int64)
        self._lock = threading.Lock()
        self._pushed = 0

    @staticmethod
    def from_pool_config(config: PoolConfig, rays: int) -> 'ExperiencePool':
        return ExperiencePool(config.capacity, rays)

    def __len__(self) -> int:
        return min(self._pushed, self.capacity)

    @property
    def pushed(self) -> int:
        """
        Transitions pushed over the pool's lifetime, evicted ones included.
        """
        return self._pushed

    def _columns(self):
        return (self._obs, self._available, self._action, self._reward, self._next_obs, self._next_available,
                self._terminal)

    def push(self, t: Transition) -> None:
        """
        Appends `t`, evicting the oldest transition once full.
        """
        with self._lock:
            slot = self._pushed % self.capacity
            self._versions[slot] += 1
            self._obs[slot] = t.obs.scans
            self._available[slot] = t.obs.available
            self._action[slot] = int(t.action)
            self._reward[slot] = t.reward
            self._next_obs[slot] = t.next_obs.scans
            self._next_available[slot] = t.next_obs.available
            self._terminal[slot] = t.terminal
            self._versions[slot] += 1
            self._pushed += 1

    def extend(self, batch: Batch) -> None:
        """
        Appends a whole batch in row order.
        """
        if batch.obs.shape[1:] != (NUM_SENSORS, self.rays):
            raise ValueError(f"Batch scans of shape {batch.obs.shape[1:]} do not fit this pool.")
        with self._lock:
            for start in range(0, batch.size, self.capacity):
                rows = batch.select(slice(start, start + self.capacity))
                slots = (self._pushed + np.arange(rows.size)) % self.capacity
                self._versions[slots] += 1
                for column, values in zip(self._columns(), rows):
                    column[slots] = values
                self._versions[slots] += 1
                self._pushed += rows.size

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """
        :raise: RuntimeError if the pool holds fewer than `batch_size` transitions
        """
        size = len(self)
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1.")
        if size < batch_size:
            raise RuntimeError(f"Cannot sample {batch_size} transitions from a pool holding {size}.")
        return self._read(rng.integers(0, size, size=batch_size))

    def _read(self, slots: np.ndarray) -> Batch:
        before = self._versions[slots]
        out = [column[slots] for column in self._columns()]
        pending = np.flatnonzero((before % 2 == 1) | (self._versions[slots] != before))
        retries = 0
        while pending.size:
            retries += 1
            if retries > _MAX_READ_RETRIES:
                raise RuntimeError("Unable to read a consistent snapshot of the pool.")
            retry_slots = slots[pending]
            before = self._versions[retry_slots]
            for dst, column in zip(out, self._columns()):
                dst[pending] = column[retry_slots]
            stable = (before % 2 == 0) & (self._versions[retry_slots] == before)
            pending = pending[~stable]
        return Batch(*out)

    def ready(self, config: PoolConfig) -> bool:
        return len(self) >= config.training_threshold

    def __repr__(self) -> str:
        return f"ExperiencePool(size={len(self)}, capacity={self.capacity})"

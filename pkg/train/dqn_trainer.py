import logging
import math
from typing import NamedTuple, Optional, Protocol, List

import numpy as np

from neural.layers import Mode
from neural.loss import pseudo_huber
from neural.rmsprop import RmsProp
from replay.experience_pool import Batch
from train.train_config import TrainConfig


class QNetwork(Protocol):
    """
    What training needs from a network, as `FusionNetwork` provides it.
    """

    def forward(self, x: np.ndarray, mode: Mode = ..., path_mask: Optional[np.ndarray] = ...) -> np.ndarray: ...

    def backward(self, grad: np.ndarray) -> np.ndarray: ...

    def parameters(self) -> List[np.ndarray]: ...

    def gradients(self) -> List[np.ndarray]: ...

    def load_parameters(self, arrays) -> None: ...

    def clone(self) -> 'QNetwork': ...


class StepStats(NamedTuple):
    loss: float
    # mean over the batch of max_a Q(s, a) under the online network
    mean_max_q: float


def epsilon(t: int, config: TrainConfig) -> float:
    """
    Exponential annealing from `epsilon_start` at t = 0 to `epsilon_end` at t = `epsilon_anneal_steps`, constant
    afterwards.
    """
    if t < 0:
        raise ValueError("Step count must be >= 0.")
    if t >= config.epsilon_anneal_steps:
        return config.epsilon_end
    ratio = config.epsilon_end / config.epsilon_start
    return max(config.epsilon_end,
               config.epsilon_start * math.exp(t / config.epsilon_anneal_steps * math.log(ratio)))


def double_q_targets(net: QNetwork, target: QNetwork, batch: Batch, gamma: float) -> np.ndarray:
    """
    y = r for terminal transitions, else r + gamma * Q(s', argmax_a' Q(s', a'; net); target).
    """
    q_next_online = net.forward(batch.next_obs, Mode.EVAL, batch.next_available)
    q_next_target = target.forward(batch.next_obs, Mode.EVAL, batch.next_available)
    best = np.argmax(q_next_online, axis=1)
    bootstrap = q_next_target[np.arange(batch.size), best].astype(np.float64)
    reward = batch.reward.astype(np.float64)
    return np.where(batch.terminal, reward, reward + gamma * bootstrap)


def train_step(net: QNetwork, target: QNetwork, batch: Batch, config: TrainConfig, optimizer: RmsProp,
               rng: Optional[np.random.Generator] = None) -> StepStats:
    """
    One RMSProp update of `net` on the mean pseudo-Huber Bellman residual.  Gradients only flow through
    Q(s, a; net); `target` is never modified.
    :param rng: DropPath randomness, used when `config.droppath_rate` > 0
    """
    y = double_q_targets(net, target, batch, config.gamma)
    rows = np.arange(batch.size)
    if config.droppath_rate > 0:
        q = net.forward(batch.obs, Mode.TRAIN_DROPPATH, batch.available, rng)
    else:
        q = net.forward(batch.obs, Mode.TRAIN, batch.available)
    q_sa = q[rows, batch.action]
    losses, d_q_sa = pseudo_huber(q_sa, y, config.huber_delta)
    grad = np.zeros(q.shape, dtype=np.float64)
    grad[rows, batch.action] = d_q_sa / batch.size
    net.backward(grad.astype(q.dtype))
    optimizer.step(net.parameters(), net.gradients())
    return StepStats(loss=float(losses.mean()), mean_max_q=float(q.max(axis=1).mean()))


def sync_target(net: QNetwork, target: QNetwork) -> None:
    target.load_parameters(net.parameters())


class DqnTrainer:

    """
    Owns the online network, its target copy and the optimizer state.  The target is hard-synced every
    `target_sync_interval` batches.
    """

    def __init__(self, net: QNetwork, config: TrainConfig, rng: Optional[np.random.Generator] = None):
        self._log = logging.getLogger(type(self).__name__)
        self.net = net
        self.target = net.clone()
        self.config = config
        self.optimizer = RmsProp(config.learning_rate, config.rms_decay, config.rms_epsilon)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.batches = 0

    def train(self, batch: Batch) -> StepStats:
        stats = train_step(self.net, self.target, batch, self.config, self.optimizer, self.rng)
        self.batches += 1
        if self.batches % self.config.target_sync_interval == 0:
            sync_target(self.net, self.target)
            self._log.debug(f"Synced target network at batch {self.batches}.")
        return stats

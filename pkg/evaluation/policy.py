from abc import ABC, abstractmethod

import numpy as np

from arena.simulator import NUM_ACTIONS, Action, Observation
from fusion.network import FusionNetwork, greedy_action


class Policy(ABC):
    """
    Defines what the evaluation harness rolls out.  `act` is called once per step with the current observation and
    the episode's own random generator, which is seeded from the rollout seed, so implementations that need
    randomness must draw from it to keep evaluations reproducible.

    Implementations must not keep per-episode state in `self`: rollouts of different seeds may run concurrently.
    """

    def __init__(self, name: str):
        self.name = name

    @abstractmethod
    def act(self, obs: Observation, rng: np.random.Generator) -> Action:
        """
        :param obs: observation with the suite's sensor availability applied
        :param rng: per-episode generator
        :return: the action to take
        """
        pass

    def __str__(self):
        return self.name

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name})"


class CheckpointPolicy(Policy):

    """
    Greedy (epsilon = 0) policy of a trained network.  Unavailable sensors arrive as zero scans; the availability
    flags are handed to the network as its path mask, which accumulate fusion honours as dropped paths.
    """

    def __init__(self, net: FusionNetwork, name: str | None = None):
        super().__init__(name=name or net.architecture.value)
        self.net = net

    def act(self, obs: Observation, rng: np.random.Generator) -> Action:
        return greedy_action(self.net, obs)


class RandomPolicy(Policy):

    def __init__(self):
        super().__init__(name="random")

    def act(self, obs: Observation, rng: np.random.Generator) -> Action:
        return Action(int(rng.integers(0, NUM_ACTIONS)))

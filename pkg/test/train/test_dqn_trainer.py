import math
from typing import Optional
from unittest import TestCase

import numpy as np

from neural.layers import Flatten, FullyConnected, Mode
from neural.rmsprop import RmsProp
from neural.sequential import Sequential
from replay.experience_pool import Batch
from train.dqn_trainer import DqnTrainer, double_q_targets, epsilon, sync_target, train_step
from train.train_config import TrainConfig

# two states, two actions: action 0 stays, action 1 switches; entering state 1 pays 1
STATES = 2
GAMMA = 0.5
# value iteration fixed point for GAMMA = 0.5
Q_STAR = np.array([[1.0, 2.0], [2.0, 1.0]])


def one_hot(states: np.ndarray) -> np.ndarray:
    obs = np.zeros((len(states), 3, STATES))
    obs[np.arange(len(states)), 0, states] = 1.0
    return obs


def tabular_batch() -> Batch:
    states = np.array([0, 0, 1, 1])
    actions = np.array([0, 1, 0, 1])
    next_states = np.where(actions == 0, states, 1 - states)
    n = len(states)
    return Batch(obs=one_hot(states), available=np.ones((n, 3), dtype=bool), action=actions,
                 reward=(next_states == 1).astype(np.float64), next_obs=one_hot(next_states),
                 next_available=np.ones((n, 3), dtype=bool), terminal=np.zeros(n, dtype=bool))


class TabularNet(Sequential):
    """
    One-hot states through a single linear layer.  Every sensor is always available, so the mask carries nothing.
    """

    def forward(self, x: np.ndarray, mode: Mode = Mode.EVAL, path_mask: Optional[np.ndarray] = None) -> np.ndarray:
        return super().forward(x, mode)


def tabular_net(seed: int = 0) -> TabularNet:
    return TabularNet([Flatten(), FullyConnected(3 * STATES, 2, np.random.default_rng(seed), np.float64)])


class TestEpsilon(TestCase):

    def test_schedule(self):
        cfg = TrainConfig(epsilon_start=1.0, epsilon_end=0.1, epsilon_anneal_steps=1000)
        self.assertEqual(1.0, epsilon(0, cfg))
        self.assertAlmostEqual(math.sqrt(0.1), epsilon(500, cfg), places=12)
        self.assertAlmostEqual(0.1, epsilon(1000, cfg), places=12)
        self.assertEqual(0.1, epsilon(5000, cfg))
        self.assertRaises(ValueError, lambda: epsilon(-1, cfg))

    def test_monotone(self):
        cfg = TrainConfig(epsilon_anneal_steps=100)
        values = [epsilon(t, cfg) for t in range(150)]
        self.assertTrue(all(a >= b for a, b in zip(values, values[1:])))


class TestTargets(TestCase):

    def test_terminal_target_is_reward(self):
        net = tabular_net()
        batch = tabular_batch()._replace(reward=np.full(4, -1.0), terminal=np.ones(4, dtype=bool))
        np.testing.assert_array_equal(np.full(4, -1.0), double_q_targets(net, net.clone(), batch, 0.99))

    def test_zero_discount(self):
        net = tabular_net()
        batch = tabular_batch()
        np.testing.assert_array_equal(batch.reward, double_q_targets(net, net.clone(), batch, 0.0))

    def test_double_q_selection(self):
        online, target = tabular_net(), tabular_net()
        online.load_parameters([np.array([[5.0, 0, 0, 0, 0, 0], [0, 5.0, 0, 0, 0, 0]]), np.zeros(2)])
        target.load_parameters([np.array([[1.0, 1.0, 0, 0, 0, 0], [3.0, 3.0, 0, 0, 0, 0]]), np.zeros(2)])
        batch = tabular_batch()
        # online prefers action 0 in state 0 and action 1 in state 1, the target values that choice
        expected = batch.reward + 0.5 * np.where(batch.next_obs[:, 0, 0] == 1.0, 1.0, 3.0)
        np.testing.assert_allclose(expected, double_q_targets(online, target, batch, 0.5))


class TestTrainStep(TestCase):

    def test_only_taken_action_moves(self):
        net = tabular_net()
        target = net.clone()
        before = [p.copy() for p in net.parameters()]
        batch = tabular_batch().select(np.array([0, 2]))
        train_step(net, target, batch, TrainConfig(batch_size=2), RmsProp())
        weights, bias = net.parameters()
        np.testing.assert_array_equal(before[0][1], weights[1])
        self.assertEqual(before[1][1], bias[1])
        self.assertFalse(np.array_equal(before[0][0], weights[0]))
        for a, b in zip(target.parameters(), before):
            np.testing.assert_array_equal(a, b)

    def test_loss_at_fixed_point(self):
        net = tabular_net()
        net.load_parameters([np.zeros((2, 6)), np.zeros(2)])
        net.parameters()[0][:, 0] = Q_STAR[0]
        net.parameters()[0][:, 1] = Q_STAR[1]
        stats = train_step(net, net.clone(), tabular_batch(), TrainConfig(gamma=GAMMA, batch_size=4), RmsProp())
        self.assertAlmostEqual(0.0, stats.loss, places=12)
        self.assertAlmostEqual(2.0, stats.mean_max_q, places=12)

    def test_converges_on_tabular_problem(self):
        cfg = TrainConfig(gamma=GAMMA, learning_rate=1e-3, batch_size=4, target_sync_interval=1)
        trainer = DqnTrainer(tabular_net(), cfg)
        batch = tabular_batch()
        for _ in range(12000):
            trainer.train(batch)
        q = trainer.net.forward(one_hot(np.arange(STATES)))
        np.testing.assert_allclose(Q_STAR, q, atol=0.01)


class TestDqnTrainer(TestCase):

    def test_sync_interval(self):
        trainer = DqnTrainer(tabular_net(), TrainConfig(batch_size=4, target_sync_interval=3, learning_rate=0.01))
        batch = tabular_batch()
        trainer.train(batch)
        trainer.train(batch)
        self.assertFalse(np.array_equal(trainer.net.parameters()[0], trainer.target.parameters()[0]))
        trainer.train(batch)
        for a, b in zip(trainer.net.parameters(), trainer.target.parameters()):
            np.testing.assert_array_equal(a, b)
        self.assertEqual(3, trainer.batches)

    def test_sync_target_copies(self):
        net, target = tabular_net(1), tabular_net(2)
        sync_target(net, target)
        for a, b in zip(net.parameters(), target.parameters()):
            np.testing.assert_array_equal(a, b)
        net.parameters()[1][0] += 1.0
        self.assertNotEqual(net.parameters()[1][0], target.parameters()[1][0])

from typing import List, Optional, Sequence

import numpy as np

DEFAULT_LEARNING_RATE = 1e-4
DEFAULT_DECAY = 0.95
DEFAULT_EPSILON = 1e-6


class RmsProp:

    """
    RMSProp without momentum.  Holds the per-parameter running mean-square accumulators:

        acc <- decay * acc + (1 - decay) * g^2
        p   <- p - lr * g / (sqrt(acc) + epsilon)

    The accumulators are created on the first step and bound to that parameter list's shapes.
    """

    def __init__(self, learning_rate: float = DEFAULT_LEARNING_RATE, decay: float = DEFAULT_DECAY,
                 epsilon: float = DEFAULT_EPSILON):
        if learning_rate <= 0 or not 0 <= decay < 1 or epsilon <= 0:
            raise ValueError("Invalid RMSProp hyperparameters.")
        self.learning_rate = learning_rate
        self.decay = decay
        self.epsilon = epsilon
        self.accumulators: Optional[List[np.ndarray]] = None

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        """
        Updates `params` in place.
        :raise: ValueError if the shapes do not match the gradients or the accumulators
        """
        if len(params) != len(grads):
            raise ValueError("Parameter and gradient counts differ.")
        if self.accumulators is None:
            self.accumulators = [np.zeros(p.shape, dtype=np.float64) for p in params]
        if len(self.accumulators) != len(params):
            raise ValueError("Optimizer is bound to a different parameter list.")
        for p, g, acc in zip(params, grads, self.accumulators):
            if p.shape != g.shape or p.shape != acc.shape:
                raise ValueError(f"Shape mismatch: param {p.shape}, grad {g.shape}, accumulator {acc.shape}.")
            g64 = g.astype(np.float64, copy=False)
            acc *= self.decay
            acc += (1.0 - self.decay) * g64 * g64
            update = self.learning_rate * g64 / (np.sqrt(acc) + self.epsilon)
            p -= update.astype(p.dtype, copy=False)

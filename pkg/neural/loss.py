from typing import Tuple

import numpy as np

DEFAULT_DELTA = 1.0


def pseudo_huber(prediction: np.ndarray | float, target: np.ndarray | float,
                 delta: float = DEFAULT_DELTA) -> Tuple[np.ndarray, np.ndarray]:
    """
    Elementwise pseudo-Huber loss `delta^2 (sqrt(1 + (e/delta)^2) - 1)` with `e = prediction - target`, and its
    derivative with respect to the prediction, `e / sqrt(1 + (e/delta)^2)`, which is bounded by `delta`.
    :return: (loss, dloss/dprediction)
    """
    if delta <= 0:
        raise ValueError("delta must be positive.")
    e = np.asarray(prediction, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    scale = np.sqrt(1.0 + (e / delta) ** 2)
    return delta ** 2 * (scale - 1.0), e / scale


def squared_error(prediction: np.ndarray | float, target: np.ndarray | float) -> Tuple[np.ndarray, np.ndarray]:
    e = np.asarray(prediction, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return e ** 2, 2.0 * e

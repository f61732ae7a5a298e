import numpy as np

from arena.simulator import NUM_SENSORS, ROBOT_SENSOR


def sample_path_mask(rng: np.random.Generator, batch: int, rate: float) -> np.ndarray:
    """
    (batch, 3) keep-mask.  Each remote sensor path is dropped independently with probability `rate`; the robot
    sensor path is never dropped.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"Drop rate out of range [0, 1]: {rate}")
    keep = rng.random((batch, NUM_SENSORS)) >= rate
    keep[:, ROBOT_SENSOR] = True
    return keep


def sample_ray_mask(rng: np.random.Generator, shape: tuple, rate: float) -> np.ndarray:
    """
    Keep-mask over individual lidar rays, each dropped with probability `rate`.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"Drop rate out of range [0, 1]: {rate}")
    return rng.random(shape) >= rate

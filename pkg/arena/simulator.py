import logging
import math
from enum import Enum, IntEnum
from typing import NamedTuple, Tuple

import numpy as np

from arena.arena_config import ArenaConfig
from arena.geometry import (Point, Pose2D, distance, disc_inside, ray_box_exit, ray_circle, ray_rectangle,
                            rectangle_disc_overlap, rectangle_inside, wrap_angle)

_log = logging.getLogger("simulator")

ROBOT_SENSOR = 0
NUM_SENSORS = 3
ALL_AVAILABLE: Tuple[bool, bool, bool] = (True, True, True)

# Normalized scan value of a ray that returned nothing (dropped or unavailable sensor)
MISSING_RAY = 0.0
NO_HIT = 1.0

# alias: vector of `lidar_rays` normalized ranges in [0, 1]
LidarScan = np.ndarray


class PlacementError(RuntimeError):
    """
    Raised by `reset` when no collision-free placement was found, which signals a degenerate configuration.
    """
    pass


class Action(IntEnum):
    """
    Fixed index mapping, the Q-network output order.
    """
    MOVE_LEFT = 0
    MOVE_RIGHT = 1
    MOVE_FORWARD = 2
    MOVE_BACKWARD = 3
    ROTATE_CW = 4
    ROTATE_CCW = 5
    GRIP = 6


NUM_ACTIONS = len(Action)


class Cause(Enum):
    RUNNING = "running"
    GRIP_SUCCESS = "grip_success"
    GRIP_FAILURE = "grip_failure"
    COLLISION = "collision"
    STEP_CAP = "step_cap"


class WorldState(NamedTuple):
    robot: Pose2D
    can: Point
    steps_elapsed: int = 0
    terminal: bool = False


class Observation(NamedTuple):
    """
    `scans` is a (3, lidar_rays) array ordered robot-mounted, corner-1, corner-2.
    """
    scans: np.ndarray
    available: Tuple[bool, bool, bool]


class StepResult(NamedTuple):
    observation: Observation
    reward: float
    terminal: bool
    cause: Cause


# body-frame (dx, dy, dheading) multipliers of translation_step / rotation_step
_MOTIONS = {
    Action.MOVE_LEFT: (0.0, 1.0, 0.0),
    Action.MOVE_RIGHT: (0.0, -1.0, 0.0),
    Action.MOVE_FORWARD: (1.0, 0.0, 0.0),
    Action.MOVE_BACKWARD: (-1.0, 0.0, 0.0),
    Action.ROTATE_CW: (0.0, 0.0, -1.0),
    Action.ROTATE_CCW: (0.0, 0.0, 1.0),
}


def grip_target(robot: Pose2D, config: ArenaConfig) -> Point:
    return robot.to_world(config.grip_offset, 0.0)


def can_distance(state: WorldState, config: ArenaConfig) -> float:
    return distance(state.can, grip_target(state.robot, config))


def reward(state: WorldState, config: ArenaConfig) -> float:
    """
    Normalized negative distance from the can to the grip target, in [-1, 0].
    """
    return max(-1.0, -can_distance(state, config) / config.d_max)


def is_legal(robot: Pose2D, can: Point, config: ArenaConfig) -> bool:
    return (rectangle_inside(robot, config.robot_half_extents, config.width, config.length)
            and disc_inside(can, config.can_radius, config.width, config.length)
            and not rectangle_disc_overlap(robot, config.robot_half_extents, can, config.can_radius))


def reset(rng_seed: int, config: ArenaConfig) -> WorldState:
    """
    Samples robot pose and can position uniformly over collision-free placements by rejection.
    :raise: PlacementError after `max_placement_attempts` rejections
    """
    rng = np.random.default_rng(rng_seed)
    r = config.can_radius
    for _ in range(config.max_placement_attempts):
        x, y = rng.uniform(0.0, config.width), rng.uniform(0.0, config.length)
        robot = Pose2D.of(x, y, rng.uniform(-math.pi, math.pi))
        can = (float(rng.uniform(r, max(r, config.width - r))), float(rng.uniform(r, max(r, config.length - r))))
        if is_legal(robot, can, config):
            return WorldState(robot=robot, can=can)
    raise PlacementError(f"No collision-free placement after {config.max_placement_attempts} attempts. "
                         f"Is the robot footprint larger than the arena?")


def _ray_directions(heading: float, config: ArenaConfig) -> np.ndarray:
    angles = heading + np.linspace(-config.lidar_fov / 2, config.lidar_fov / 2, config.lidar_rays)
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def raycast(sensor_pose: Pose2D, state: WorldState, config: ArenaConfig, sees_robot: bool = True) -> LidarScan:
    """
    Analytic lidar: the nearest intersection of each ray with the arena walls, the can and (unless the sensor is the
    robot's own) the robot footprint, clamped to `lidar_max_range` and normalized to [0, 1].
    """
    origin = sensor_pose.position()
    directions = _ray_directions(sensor_pose.heading, config)
    hits = ray_box_exit(origin, directions, config.width, config.length)
    hits = np.minimum(hits, ray_circle(origin, directions, state.can, config.can_radius))
    if sees_robot:
        hits = np.minimum(hits, ray_rectangle(origin, directions, state.robot, config.robot_half_extents))
    return np.clip(hits / config.lidar_max_range, 0.0, NO_HIT)


def robot_sensor_pose(robot: Pose2D, config: ArenaConfig) -> Pose2D:
    return Pose2D.of(*robot.to_world(config.robot_sensor_offset, 0.0), robot.heading)


def observe(state: WorldState, available: Tuple[bool, bool, bool], config: ArenaConfig) -> Observation:
    """
    :raise: ValueError if the robot sensor is flagged unavailable; it is wired and always present
    """
    available = tuple(bool(a) for a in available)
    if len(available) != NUM_SENSORS:
        raise ValueError(f"Expected {NUM_SENSORS} availability flags.")
    if not available[ROBOT_SENSOR]:
        raise ValueError("The robot sensor is always available.")
    scans = np.full((NUM_SENSORS, config.lidar_rays), MISSING_RAY)
    scans[ROBOT_SENSOR] = raycast(robot_sensor_pose(state.robot, config), state, config, sees_robot=False)
    for i, pose in enumerate(config.corner_sensor_poses, start=1):
        if available[i]:
            scans[i] = raycast(pose, state, config)
    return Observation(scans=scans, available=available)


def step(state: WorldState, action: Action, config: ArenaConfig,
         available: Tuple[bool, bool, bool] = ALL_AVAILABLE) -> Tuple[WorldState, StepResult]:
    """
    Advances the world by one 100 ms tick.  A motion that would collide leaves the robot where it was and terminates
    with reward -1.  Grip always terminates; success earns 0, failure the state's ordinary reward.
    :raise: RuntimeError when stepping a terminal state
    """
    if state.terminal:
        raise RuntimeError("Cannot step a terminal state. Reset first.")
    action = Action(action)
    steps = state.steps_elapsed + 1
    robot = state.robot
    if action is Action.GRIP:
        if can_distance(state, config) <= config.grip_tolerance:
            cause, r = Cause.GRIP_SUCCESS, 0.0
        else:
            cause, r = Cause.GRIP_FAILURE, reward(state, config)
    else:
        fx, fy, fh = _MOTIONS[action]
        moved_x, moved_y = robot.to_world(fx * config.translation_step, fy * config.translation_step)
        moved = Pose2D.of(moved_x, moved_y, wrap_angle(robot.heading + fh * config.rotation_step))
        if is_legal(moved, state.can, config):
            robot = moved
            cause = Cause.RUNNING
            r = reward(WorldState(robot=robot, can=state.can), config)
        else:
            _log.debug(f"Collision at step {steps} moving {action.name}.")
            cause, r = Cause.COLLISION, -1.0
    if cause is Cause.RUNNING and steps >= config.max_steps:
        cause = Cause.STEP_CAP
    terminal = cause is not Cause.RUNNING
    next_state = WorldState(robot=robot, can=state.can, steps_elapsed=steps, terminal=terminal)
    return next_state, StepResult(observation=observe(next_state, available, config), reward=r,
                                  terminal=terminal, cause=cause)


def can_behind(state: WorldState, config: ArenaConfig) -> bool:
    """
    True when the can lies outside the robot lidar's field of view.
    """
    sensor = robot_sensor_pose(state.robot, config)
    lx, ly = sensor.to_local(*state.can)
    return abs(math.atan2(ly, lx)) > config.lidar_fov / 2

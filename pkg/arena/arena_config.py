import logging
import math
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from arena.geometry import Pose2D, max_box_distance
from common import config_provider
from common.config_provider import CastFn, ConfigError

config_root_path = ("arena",)

_log = logging.getLogger("arena_config")

# dense heading grid used for the grip-target-to-can maximum, refined afterwards
_D_MAX_GRID = 3600


@dataclass(frozen=True)
class ArenaConfig:
    """
    Geometry and kinematics of the search-and-pick arena.  Lengths are meters, angles radians.  The arena spans
    [0, width] x [0, length]; corner lidars sit on the diagonal at (inset, inset) and (width - inset, length - inset),
    both facing the arena center.
    """
    width: float = 1.8
    length: float = 2.7
    robot_half_extents: Tuple[float, float] = (0.29, 0.20)
    can_radius: float = 0.033
    lidar_rays: int = 128
    lidar_fov: float = math.pi
    lidar_max_range: float = 4.0
    translation_step: float = 0.035
    rotation_step: float = 0.09
    grip_offset: float = 0.4
    grip_tolerance: float = 0.05
    max_steps: int = 100
    corner_sensor_inset: float = 0.02
    max_placement_attempts: int = 10_000
    corner_sensor_poses: Optional[Tuple[Pose2D, Pose2D]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.width <= 0 or self.length <= 0:
            raise ValueError("Arena width and length must be positive.")
        if self.lidar_rays < 2:
            raise ValueError("At least two lidar rays are required.")
        if min(self.translation_step, self.rotation_step) <= 0:
            raise ValueError("Step sizes must be positive.")
        if min(self.robot_half_extents) <= 0 or self.can_radius <= 0:
            raise ValueError("Robot and can dimensions must be positive.")
        if self.lidar_fov <= 0 or self.lidar_max_range <= 0:
            raise ValueError("Lidar field of view and range must be positive.")
        if self.grip_tolerance < 0 or self.max_steps < 1 or self.max_placement_attempts < 1:
            raise ValueError("grip_tolerance must be >= 0, max_steps and max_placement_attempts >= 1.")
        if self.max_steps * self.translation_step < math.hypot(self.width, self.length):
            raise ValueError(f"max_steps * translation_step ({self.max_steps * self.translation_step:.3f} m) must "
                             f"cover the arena diagonal ({math.hypot(self.width, self.length):.3f} m).")
        if not 0 <= self.corner_sensor_inset < min(self.width, self.length) / 2:
            raise ValueError("corner_sensor_inset must lie in [0, min(width, length) / 2).")
        object.__setattr__(self, "robot_half_extents", tuple(float(v) for v in self.robot_half_extents))
        if self.corner_sensor_poses is None:
            object.__setattr__(self, "corner_sensor_poses", self._diagonal_corner_poses())

    def _diagonal_corner_poses(self) -> Tuple[Pose2D, Pose2D]:
        i = self.corner_sensor_inset
        cx, cy = self.width / 2, self.length / 2
        first = (i, i)
        second = (self.width - i, self.length - i)
        return (Pose2D.of(*first, math.atan2(cy - first[1], cx - first[0])),
                Pose2D.of(*second, math.atan2(cy - second[1], cx - second[0])))

    @property
    def robot_sensor_offset(self) -> float:
        """
        The robot lidar is mounted at the front-center of the footprint.
        """
        return self.robot_half_extents[0]

    def _max_target_distance(self, heading: float) -> float:
        hx, hy = self.robot_half_extents
        c, s = math.cos(heading), math.sin(heading)
        ex = hx * abs(c) + hy * abs(s)
        ey = hx * abs(s) + hy * abs(c)
        dx, dy = self.grip_offset * c, self.grip_offset * s
        target_lo = (ex + dx, ey + dy)
        target_hi = (self.width - ex + dx, self.length - ey + dy)
        r = self.can_radius
        return max_box_distance(target_lo, target_hi, (r, r), (self.width - r, self.length - r))

    @cached_property
    def d_max(self) -> float:
        """
        Maximum grip-target-to-can distance over all legal placements.  For a fixed heading the legal robot centers and
        can centers are axis-aligned boxes, so the maximum is closed form; the heading is maximised over a dense grid
        (containing the four axis headings exactly) and refined locally.
        """
        grid = np.concatenate([np.linspace(-math.pi, math.pi, _D_MAX_GRID, endpoint=False),
                               [-math.pi, -math.pi / 2, 0.0, math.pi / 2]])
        values = np.array([self._max_target_distance(h) for h in grid])
        best = int(np.argmax(values))
        best_val = float(values[best])
        step = 2 * math.pi / _D_MAX_GRID
        refined = minimize_scalar(lambda h: -self._max_target_distance(h), method="bounded",
                                  bounds=(grid[best] - step, grid[best] + step))
        if refined.success and -refined.fun > best_val:
            best_val = float(-refined.fun)
        _log.debug(f"Computed D_max: {best_val:.6f} m")
        return best_val

    @staticmethod
    def from_config() -> 'ArenaConfig':
        """
        Reads the `arena` section.  Absent keys take the documented defaults.
        """
        defaults = ArenaConfig()
        root = [*config_root_path]
        try:
            half_extents = config_provider.get_object([*root, "robot_half_extents"],
                                                      default=list(defaults.robot_half_extents))
            if len(half_extents) != 2:
                raise ConfigError("arena.robot_half_extents must have two entries.")
            return ArenaConfig(
                width=config_provider.get_value([*root, "width"], defaults.width, CastFn.to_float),
                length=config_provider.get_value([*root, "length"], defaults.length, CastFn.to_float),
                robot_half_extents=(CastFn.to_float(half_extents[0]), CastFn.to_float(half_extents[1])),
                can_radius=config_provider.get_value([*root, "can_radius"], defaults.can_radius, CastFn.to_float),
                lidar_rays=config_provider.get_value([*root, "lidar_rays"], defaults.lidar_rays, CastFn.to_int),
                lidar_fov=config_provider.get_value([*root, "lidar_fov"], defaults.lidar_fov, CastFn.to_float),
                lidar_max_range=config_provider.get_value([*root, "lidar_max_range"], defaults.lidar_max_range,
                                                          CastFn.to_float),
                translation_step=config_provider.get_value([*root, "translation_step"], defaults.translation_step,
                                                           CastFn.to_float),
                rotation_step=config_provider.get_value([*root, "rotation_step"], defaults.rotation_step,
                                                        CastFn.to_float),
                grip_offset=config_provider.get_value([*root, "grip_offset"], defaults.grip_offset, CastFn.to_float),
                grip_tolerance=config_provider.get_value([*root, "grip_tolerance"], defaults.grip_tolerance,
                                                         CastFn.to_float),
                max_steps=config_provider.get_value([*root, "max_steps"], defaults.max_steps, CastFn.to_int),
                corner_sensor_inset=config_provider.get_value([*root, "corner_sensor_inset"],
                                                              defaults.corner_sensor_inset, CastFn.to_float),
                max_placement_attempts=config_provider.get_value([*root, "max_placement_attempts"],
                                                                 defaults.max_placement_attempts, CastFn.to_int),
            )
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f"Invalid arena configuration: {e}") from e


CONFIG_KEYS = tuple(f.name for f in fields(ArenaConfig) if f.name != "corner_sensor_poses")

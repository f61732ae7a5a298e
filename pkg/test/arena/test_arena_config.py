import math
from unittest import TestCase

from arena.arena_config import ArenaConfig
from common import config_provider
from common.config_provider import ConfigError


class TestArenaConfig(TestCase):

    def setUp(self) -> None:
        config_provider._load_string("")

    def test_d_max_is_reached_facing_away_from_far_corner(self):
        c = ArenaConfig()
        hx, hy = c.robot_half_extents
        # robot in the (0, 0) corner facing -y, can in the opposite corner
        expected = math.hypot(c.width - c.can_radius - hy, c.length - c.can_radius - (hx - c.grip_offset))
        self.assertAlmostEqual(expected, c.d_max, delta=1e-9)

    def test_corner_sensors_on_diagonal_face_center(self):
        c = ArenaConfig()
        first, second = c.corner_sensor_poses
        self.assertAlmostEqual(c.corner_sensor_inset, first.x)
        self.assertAlmostEqual(c.length - c.corner_sensor_inset, second.y)
        for pose in (first, second):
            angle = math.atan2(c.length / 2 - pose.y, c.width / 2 - pose.x)
            self.assertAlmostEqual(angle, pose.heading, places=12)

    def test_reach_must_cover_diagonal(self):
        self.assertRaises(ValueError, lambda: ArenaConfig(translation_step=0.03))

    def test_invalid_dimensions_raise(self):
        self.assertRaises(ValueError, lambda: ArenaConfig(width=0.0))
        self.assertRaises(ValueError, lambda: ArenaConfig(lidar_rays=1))
        self.assertRaises(ValueError, lambda: ArenaConfig(robot_half_extents=(0.0, 0.2)))

    def test_from_config_reads_overrides(self):
        config_provider._load_string("""
        arena:
            lidar_rays: 64
            robot_half_extents: [0.3, 0.1]
            max_steps: 120
        """)
        c = ArenaConfig.from_config()
        self.assertEqual(64, c.lidar_rays)
        self.assertEqual((0.3, 0.1), c.robot_half_extents)
        self.assertEqual(120, c.max_steps)
        self.assertEqual(1.8, c.width)

    def test_from_config_defaults(self):
        self.assertEqual(ArenaConfig(), ArenaConfig.from_config())

    def test_from_config_invalid_value_is_config_error(self):
        config_provider._load_string("""
        arena:
            width: -1
        """)
        self.assertRaises(ConfigError, ArenaConfig.from_config)

    def test_from_config_bad_half_extents(self):
        config_provider._load_string("""
        arena:
            robot_half_extents: [0.3]
        """)
        self.assertRaises(ConfigError, ArenaConfig.from_config)

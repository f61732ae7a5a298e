import math
from unittest import TestCase

import numpy as np

from arena import simulator
from arena.arena_config import ArenaConfig
from arena.geometry import Pose2D
from arena.simulator import (ALL_AVAILABLE, MISSING_RAY, Action, Cause, PlacementError, WorldState, can_distance,
                             grip_target, is_legal, observe, raycast, reset, reward, robot_sensor_pose, step)

CONFIG = ArenaConfig()
CENTER = Pose2D.of(0.9, 1.35, 0.0)
FAR_CAN = (0.3, 0.3)


def march(sensor: Pose2D, state: WorldState, config: ArenaConfig, sees_robot: bool,
          step_m: float = 5e-4) -> np.ndarray:
    """
    Ray-marching oracle: fixed steps until a point is occupied, then bisection of the last step.
    """
    angles = sensor.heading + np.linspace(-config.lidar_fov / 2, config.lidar_fov / 2, config.lidar_rays)
    d = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    hx, hy = config.robot_half_extents
    rc, rs = math.cos(state.robot.heading), math.sin(state.robot.heading)

    def occupied(t: np.ndarray) -> np.ndarray:
        px = sensor.x + d[:, 0, None] * t
        py = sensor.y + d[:, 1, None] * t
        hit = (px < 0) | (px > config.width) | (py < 0) | (py > config.length)
        hit |= np.hypot(px - state.can[0], py - state.can[1]) <= config.can_radius
        if sees_robot:
            lx = rc * (px - state.robot.x) + rs * (py - state.robot.y)
            ly = -rs * (px - state.robot.x) + rc * (py - state.robot.y)
            hit |= (np.abs(lx) <= hx) & (np.abs(ly) <= hy)
        return hit

    ts = np.arange(1, int(config.lidar_max_range / step_m) + 1) * step_m
    occ = occupied(ts[None, :].repeat(len(d), axis=0))
    first = occ.argmax(axis=1)
    hi = ts[first]
    lo = np.maximum(hi - step_m, 0.0)
    for _ in range(30):
        mid = (lo + hi) / 2
        inside = occupied(mid[:, None])[:, 0]
        hi = np.where(inside, mid, hi)
        lo = np.where(inside, lo, mid)
    return hi


class TestReset(TestCase):

    def test_same_seed_same_state(self):
        self.assertEqual(reset(42, CONFIG), reset(42, CONFIG))
        self.assertNotEqual(reset(42, CONFIG), reset(43, CONFIG))

    def test_resets_are_legal(self):
        for seed in range(2000):
            state = reset(seed, CONFIG)
            self.assertTrue(is_legal(state.robot, state.can, CONFIG), f"seed {seed}")
            self.assertEqual(0, state.steps_elapsed)
            self.assertFalse(state.terminal)

    def test_robot_larger_than_arena_raises(self):
        tiny = ArenaConfig(width=0.5, length=0.5, max_placement_attempts=100)
        self.assertRaises(PlacementError, lambda: reset(0, tiny))


class TestStep(TestCase):

    def test_forward_moves_along_heading(self):
        state = WorldState(robot=CENTER, can=FAR_CAN)
        nxt, result = step(state, Action.MOVE_FORWARD, CONFIG)
        self.assertAlmostEqual(CENTER.x + CONFIG.translation_step, nxt.robot.x, places=12)
        self.assertAlmostEqual(CENTER.y, nxt.robot.y, places=12)
        self.assertEqual(1, nxt.steps_elapsed)
        self.assertEqual(Cause.RUNNING, result.cause)
        self.assertFalse(result.terminal)
        self.assertAlmostEqual(reward(nxt, CONFIG), result.reward, places=15)

    def test_strafe_left_and_rotation(self):
        state = WorldState(robot=Pose2D.of(0.9, 1.35, math.pi / 2), can=FAR_CAN)
        left, _ = step(state, Action.MOVE_LEFT, CONFIG)
        self.assertAlmostEqual(0.9 - CONFIG.translation_step, left.robot.x, places=12)
        ccw, _ = step(state, Action.ROTATE_CCW, CONFIG)
        self.assertAlmostEqual(math.pi / 2 + CONFIG.rotation_step, ccw.robot.heading, places=12)
        self.assertEqual(state.robot.position(), ccw.robot.position())
        cw, _ = step(state, Action.ROTATE_CW, CONFIG)
        self.assertAlmostEqual(math.pi / 2 - CONFIG.rotation_step, cw.robot.heading, places=12)

    def test_collision_keeps_pose_and_terminates(self):
        robot = Pose2D.of(CONFIG.width - CONFIG.robot_half_extents[0] - 0.01, 1.35, 0.0)
        state = WorldState(robot=robot, can=FAR_CAN)
        nxt, result = step(state, Action.MOVE_FORWARD, CONFIG)
        self.assertEqual(Cause.COLLISION, result.cause)
        self.assertEqual(-1.0, result.reward)
        self.assertTrue(result.terminal and nxt.terminal)
        self.assertEqual(robot, nxt.robot)

    def test_bumping_the_can_is_a_collision(self):
        can = (CENTER.x + CONFIG.robot_half_extents[0] + CONFIG.can_radius + 0.01, CENTER.y)
        _, result = step(WorldState(robot=CENTER, can=can), Action.MOVE_FORWARD, CONFIG)
        self.assertEqual(Cause.COLLISION, result.cause)

    def test_grip_success(self):
        state = WorldState(robot=CENTER, can=grip_target(CENTER, CONFIG))
        nxt, result = step(state, Action.GRIP, CONFIG)
        self.assertEqual(Cause.GRIP_SUCCESS, result.cause)
        self.assertEqual(0.0, result.reward)
        self.assertTrue(nxt.terminal)

    def test_grip_failure_earns_distance_reward(self):
        state = WorldState(robot=CENTER, can=FAR_CAN)
        nxt, result = step(state, Action.GRIP, CONFIG)
        self.assertEqual(Cause.GRIP_FAILURE, result.cause)
        self.assertEqual(reward(state, CONFIG), result.reward)
        self.assertTrue(nxt.terminal)
        self.assertEqual(state.robot, nxt.robot)

    def test_step_cap(self):
        state = WorldState(robot=CENTER, can=FAR_CAN, steps_elapsed=CONFIG.max_steps - 1)
        nxt, result = step(state, Action.ROTATE_CW, CONFIG)
        self.assertEqual(Cause.STEP_CAP, result.cause)
        self.assertTrue(nxt.terminal)
        self.assertEqual(CONFIG.max_steps, nxt.steps_elapsed)

    def test_stepping_terminal_state_raises(self):
        state = WorldState(robot=CENTER, can=FAR_CAN, terminal=True)
        self.assertRaises(RuntimeError, lambda: step(state, Action.GRIP, CONFIG))

    def test_observation_uses_availability(self):
        state = WorldState(robot=CENTER, can=FAR_CAN)
        _, result = step(state, Action.ROTATE_CW, CONFIG, (True, False, True))
        self.assertEqual((True, False, True), result.observation.available)
        self.assertTrue(np.all(result.observation.scans[1] == MISSING_RAY))
        self.assertTrue(np.all(result.observation.scans[2] > 0))


class TestReward(TestCase):

    def test_reward_in_range_on_random_states(self):
        rng = np.random.default_rng(0)
        for seed in rng.integers(0, 2 ** 31, size=3000):
            r = reward(reset(int(seed), CONFIG), CONFIG)
            self.assertLessEqual(r, 0.0)
            self.assertGreaterEqual(r, -1.0)

    def test_reward_zero_at_grip_target(self):
        self.assertEqual(0.0, reward(WorldState(robot=CENTER, can=grip_target(CENTER, CONFIG)), CONFIG))

    def test_within_tolerance_iff_reward_above_normalized_tolerance(self):
        threshold = -CONFIG.grip_tolerance / CONFIG.d_max
        target = grip_target(CENTER, CONFIG)
        near = WorldState(robot=CENTER, can=(target[0] + 0.9 * CONFIG.grip_tolerance, target[1]))
        far = WorldState(robot=CENTER, can=(target[0] + 1.1 * CONFIG.grip_tolerance, target[1]))
        self.assertGreaterEqual(reward(near, CONFIG), threshold)
        self.assertLess(reward(far, CONFIG), threshold)

    def test_opposite_corner_configuration_is_minus_one(self):
        hx, hy = CONFIG.robot_half_extents
        robot = Pose2D.of(hy, hx, -math.pi / 2)
        can = (CONFIG.width - CONFIG.can_radius, CONFIG.length - CONFIG.can_radius)
        self.assertAlmostEqual(-1.0, reward(WorldState(robot=robot, can=can), CONFIG), delta=1e-9)

    def test_can_distance_non_negative(self):
        self.assertEqual(0.0, can_distance(WorldState(robot=CENTER, can=grip_target(CENTER, CONFIG)), CONFIG))


class TestLidar(TestCase):

    def test_raycast_matches_ray_marching(self):
        rng = np.random.default_rng(7)
        for seed in rng.integers(0, 2 ** 31, size=15):
            state = reset(int(seed), CONFIG)
            sensors = [(robot_sensor_pose(state.robot, CONFIG), False)]
            sensors += [(pose, True) for pose in CONFIG.corner_sensor_poses]
            for pose, sees_robot in sensors:
                analytic = raycast(pose, state, CONFIG, sees_robot) * CONFIG.lidar_max_range
                oracle = march(pose, state, CONFIG, sees_robot)
                np.testing.assert_allclose(analytic, oracle, atol=1e-3, err_msg=f"seed {seed}")

    def test_corner_sensor_sees_robot_in_front_of_wall(self):
        state = WorldState(robot=CENTER, can=(1.6, 0.2))
        first = CONFIG.corner_sensor_poses[0]
        with_robot = raycast(first, state, CONFIG, sees_robot=True)
        without = raycast(first, state, CONFIG, sees_robot=False)
        middle = CONFIG.lidar_rays // 2
        self.assertLess(with_robot[middle], without[middle])
        expected = (math.hypot(CENTER.x - first.x, CENTER.y - first.y) - 0.3) / CONFIG.lidar_max_range
        self.assertLess(with_robot[middle], expected + 0.1)

    def test_can_occludes_the_ray_it_sits_on(self):
        robot = Pose2D.of(1.4, 2.3, 0.0)
        middle = CONFIG.lidar_rays // 2
        sensors = ((robot_sensor_pose(CENTER, CONFIG), False, CENTER, 0.35),
                   (CONFIG.corner_sensor_poses[0], True, robot, 0.6))
        for pose, sees_robot, robot_pose, distance in sensors:
            angle = pose.heading + np.linspace(-CONFIG.lidar_fov / 2, CONFIG.lidar_fov / 2, CONFIG.lidar_rays)[middle]
            can = (pose.x + distance * math.cos(angle), pose.y + distance * math.sin(angle))
            # outside the arena the can never beats the wall
            without = raycast(pose, WorldState(robot=robot_pose, can=(-10.0, -10.0)), CONFIG, sees_robot)
            state = WorldState(robot=robot_pose, can=can)
            with_can = raycast(pose, state, CONFIG, sees_robot)
            self.assertLess(with_can[middle], without[middle])
            self.assertAlmostEqual((distance - CONFIG.can_radius) / CONFIG.lidar_max_range, with_can[middle], places=9)
            self.assertTrue(np.all(with_can <= without))
            np.testing.assert_allclose(with_can * CONFIG.lidar_max_range, march(pose, state, CONFIG, sees_robot),
                                       atol=1e-3)

    def test_scans_normalized(self):
        obs = observe(reset(3, CONFIG), ALL_AVAILABLE, CONFIG)
        self.assertEqual((3, CONFIG.lidar_rays), obs.scans.shape)
        self.assertTrue(np.all(obs.scans > 0.0))
        self.assertTrue(np.all(obs.scans <= 1.0))

    def test_robot_sensor_cannot_be_unavailable(self):
        self.assertRaises(ValueError, lambda: observe(reset(3, CONFIG), (False, True, True), CONFIG))

    def test_can_behind(self):
        ahead = WorldState(robot=CENTER, can=(CENTER.x + 0.6, CENTER.y))
        behind = WorldState(robot=CENTER, can=(CENTER.x - 0.6, CENTER.y))
        self.assertFalse(simulator.can_behind(ahead, CONFIG))
        self.assertTrue(simulator.can_behind(behind, CONFIG))

import math
from typing import NamedTuple, Tuple

import numpy as np

Point = Tuple[float, float]


def wrap_angle(angle: float) -> float:
    """
    Wraps into [-pi, pi).
    """
    wrapped = (angle + math.pi) % (2 * math.pi) - math.pi
    # float modulo can land exactly on pi for inputs just below -pi
    return -math.pi if wrapped >= math.pi else wrapped


class Pose2D(NamedTuple):
    x: float
    y: float
    heading: float

    @staticmethod
    def of(x: float, y: float, heading: float) -> 'Pose2D':
        return Pose2D(x=float(x), y=float(y), heading=wrap_angle(float(heading)))

    def position(self) -> Point:
        return self.x, self.y

    def direction(self) -> Point:
        return math.cos(self.heading), math.sin(self.heading)

    def to_world(self, local_x: float, local_y: float) -> Point:
        """
        Maps a point given in this pose's body frame (x forward, y left) into the world frame.
        """
        c, s = self.direction()
        return self.x + c * local_x - s * local_y, self.y + s * local_x + c * local_y

    def to_local(self, world_x: float, world_y: float) -> Point:
        c, s = self.direction()
        dx, dy = world_x - self.x, world_y - self.y
        return c * dx + s * dy, -s * dx + c * dy


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def rectangle_corners(pose: Pose2D, half_extents: Tuple[float, float]) -> np.ndarray:
    """
    Corners of a body-frame rectangle, counterclockwise, as a (4, 2) array.
    """
    hx, hy = half_extents
    local = ((hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy))
    return np.array([pose.to_world(lx, ly) for lx, ly in local])


def rectangle_inside(pose: Pose2D, half_extents: Tuple[float, float], width: float, length: float) -> bool:
    corners = rectangle_corners(pose, half_extents)
    return bool(np.all(corners[:, 0] >= 0.0) and np.all(corners[:, 0] <= width)
                and np.all(corners[:, 1] >= 0.0) and np.all(corners[:, 1] <= length))


def disc_inside(center: Point, radius: float, width: float, length: float) -> bool:
    return radius <= center[0] <= width - radius and radius <= center[1] <= length - radius


def rectangle_disc_overlap(pose: Pose2D, half_extents: Tuple[float, float], center: Point, radius: float) -> bool:
    """
    True when the closed disc touches the interior of the rectangle (strictly closer than `radius`).
    """
    lx, ly = pose.to_local(*center)
    hx, hy = half_extents
    nearest_x = min(max(lx, -hx), hx)
    nearest_y = min(max(ly, -hy), hy)
    return math.hypot(lx - nearest_x, ly - nearest_y) < radius


def ray_box_exit(origin: Point, directions: np.ndarray, width: float, length: float) -> np.ndarray:
    """
    Distance along each unit direction from a point inside (or on) the axis-aligned box [0, width] x [0, length] to
    the box boundary.
    :param directions: (n, 2) unit vectors
    """
    ox, oy = origin
    dx, dy = directions[:, 0], directions[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(dx > 0, (width - ox) / dx, np.where(dx < 0, -ox / dx, np.inf))
        ty = np.where(dy > 0, (length - oy) / dy, np.where(dy < 0, -oy / dy, np.inf))
    return np.maximum(np.minimum(tx, ty), 0.0)


def ray_circle(origin: Point, directions: np.ndarray, center: Point, radius: float) -> np.ndarray:
    """
    Nearest non-negative hit distance of each ray with a disc, `inf` on a miss.  An origin inside the disc hits at 0.
    """
    fx, fy = origin[0] - center[0], origin[1] - center[1]
    c = fx * fx + fy * fy - radius * radius
    if c <= 0.0:
        return np.zeros(len(directions))
    b = directions[:, 0] * fx + directions[:, 1] * fy
    disc = b * b - c
    hits = np.full(len(directions), np.inf)
    ok = disc >= 0.0
    t = -b[ok] - np.sqrt(disc[ok])
    hits[ok] = np.where(t >= 0.0, t, np.inf)
    return hits


def ray_segments(origin: Point, directions: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """
    Nearest non-negative hit distance of each ray with any of the segments, `inf` on a miss.
    :param segments: (m, 2, 2) array of segment end points
    """
    ox, oy = origin
    p = segments[:, 0, :]
    e = segments[:, 1, :] - p
    dx = directions[:, 0][:, None]
    dy = directions[:, 1][:, None]
    # solve origin + t*d = p + u*e
    denom = dx * e[None, :, 1] - dy * e[None, :, 0]
    wx = p[None, :, 0] - ox
    wy = p[None, :, 1] - oy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (wx * e[None, :, 1] - wy * e[None, :, 0]) / denom
        u = (wx * dy - wy * dx) / denom
    valid = (denom != 0.0) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    t = np.where(valid, t, np.inf)
    return t.min(axis=1)


def ray_rectangle(origin: Point, directions: np.ndarray, pose: Pose2D, half_extents: Tuple[float, float]) -> np.ndarray:
    """
    Like `ray_circle`, an origin inside the rectangle hits at 0.
    """
    lx, ly = pose.to_local(*origin)
    if abs(lx) < half_extents[0] and abs(ly) < half_extents[1]:
        return np.zeros(len(directions))
    corners = rectangle_corners(pose, half_extents)
    segments = np.stack([corners, np.roll(corners, -1, axis=0)], axis=1)
    return ray_segments(origin, directions, segments)


def max_box_distance(a_lo: Point, a_hi: Point, b_lo: Point, b_hi: Point) -> float:
    """
    Largest distance between a point of box a and a point of box b (both axis-aligned, closed).
    """
    dx = max(abs(a_hi[0] - b_lo[0]), abs(b_hi[0] - a_lo[0]))
    dy = max(abs(a_hi[1] - b_lo[1]), abs(b_hi[1] - a_lo[1]))
    return math.hypot(dx, dy)

"""World, platform and jammer geometry.

World frame is z-up; azimuth is measured counter-clockwise from +x and
elevation is positive above the horizontal plane, so a jammer below the
platform has negative elevation.
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import quaternion as quat
from .errors import ConfigError, DegenerateGeometryError

MAX_PLATFORM_SPEED = 0.3  # m/s, positioning-system limit
GPS_L1 = 1.57542e9
SPEED_OF_LIGHT = 299_792_458.0


def vec3(x, y=None, z=None):
    if y is None:
        v = np.asarray(x, dtype=float).reshape(3)
    else:
        v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector {v}")
    return v


@dataclass(frozen=True)
class PoseSE3:
    position: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: quat.IDENTITY.copy())
    timestamp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        q = np.asarray(self.orientation, dtype=float).reshape(4)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValueError(f"orientation quaternion is not unit norm: {q}")
        object.__setattr__(self, "orientation", q)


@dataclass(frozen=True)
class JammerSpec:
    position: np.ndarray
    bandwidth: float = 20e6
    sweep_period: float = 20e-6
    power_dbm: float = 10.0
    center_frequency: float = GPS_L1
    sweep_shape: str = "sawtooth"
    name: str = "jammer"

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        for name in ("bandwidth", "sweep_period", "center_frequency"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        if self.sweep_shape not in ("sawtooth", "triangular"):
            raise ConfigError("sweep_shape", f"unknown shape {self.sweep_shape!r}")


@dataclass(frozen=True)
class TrajectorySpec:
    """Circle-grid trajectory plan.

    ``speed_cycle`` optionally assigns per-circle speeds (cycled in circle
    order); otherwise every circle is flown at ``speed``.
    """
    grid_rows: int = 4
    grid_cols: int = 6
    circle_radii: tuple = (0.8, 1.1, 1.4, 1.7, 2.0)
    heights: tuple = (4.8, 4.3, 3.8, 3.3)
    speed: float = 0.3
    sample_dt: float = 0.005
    grid_spacing: float = 4.0
    speed_cycle: tuple = ()
    yaw_follows_velocity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "circle_radii", tuple(float(r) for r in self.circle_radii))
        object.__setattr__(self, "heights", tuple(float(h) for h in self.heights))
        object.__setattr__(self, "speed_cycle", tuple(float(v) for v in self.speed_cycle))
        if self.grid_rows < 1:
            raise ConfigError("grid_rows", "must be >= 1")
        if self.grid_cols < 1:
            raise ConfigError("grid_cols", "must be >= 1")
        radii = np.asarray(self.circle_radii)
        if radii.size == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
            raise ConfigError("circle_radii", "must be positive and strictly increasing")
        if len(self.heights) == 0:
            raise ConfigError("heights", "must not be empty")
        for v in (self.speed,) + self.speed_cycle:
            if not 0 < v <= MAX_PLATFORM_SPEED:
                raise ConfigError("speed", f"{v} outside (0, {MAX_PLATFORM_SPEED}] m/s")
        if not self.sample_dt > 0:
            raise ConfigError("sample_dt", "must be positive")
        if not self.grid_spacing > 0:
            raise ConfigError("grid_spacing", "must be positive")

    @property
    def max_speed(self):
        return max((self.speed,) + self.speed_cycle)


@dataclass(frozen=True)
class ArrayGeometry:
    element_offsets: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.element_offsets, dtype=float)
        if off.shape != (4, 3):
            raise ConfigError("element_offsets", f"expected 4x3 offsets, got {off.shape}")
        object.__setattr__(self, "element_offsets", off)

    @classmethod
    def square(cls, side=0.09):
        h = side / 2
        # counter-clockwise from the (+x, +y) corner, body xy-plane
        return cls(np.array([[h, h, 0.0], [-h, h, 0.0], [-h, -h, 0.0], [h, -h, 0.0]]))


@dataclass(frozen=True)
class LabelRecord:
    timestamp: float
    delta: np.ndarray
    distance: float
    azimuth: float
    elevation: float
    speed: float = 0.0


class Relative(NamedTuple):
    delta: np.ndarray
    distance: float
    azimuth: float
    elevation: float


@dataclass(frozen=True)
class CirclePlan:
    index: int
    row: int
    col: int
    center: np.ndarray
    radius: float
    speed: float
    start_time: float = 0.0
    yaw_follows_velocity: bool = False

    @property
    def angular_rate(self):
        return self.speed / self.radius

    @property
    def period(self):
        return 2 * np.pi * self.radius / self.speed

    @property
    def end_time(self):
        return self.start_time + self.period

    def state(self, t):
        """Analytic position, velocity, acceleration, orientation at times ``t``."""
        t = np.asarray(t, dtype=float)
        w = self.angular_rate
        th = w * (t - self.start_time)
        c, s = np.cos(th)[..., None], np.sin(th)[..., None]
        ex = np.array([1.0, 0.0, 0.0])
        ey = np.array([0.0, 1.0, 0.0])
        pos = self.center + self.radius * (c * ex + s * ey)
        vel = self.radius * w * (-s * ex + c * ey)
        acc = -self.radius * w * w * (c * ex + s * ey)
        if self.yaw_follows_velocity:
            q = quat.from_yaw(th + np.pi / 2)
        else:
            q = np.broadcast_to(quat.IDENTITY, th.shape + (4,)).copy()
        return pos, vel, acc, q


class Trajectory:
    """Time-stamped pose sequence stored column-wise.

    Indexing returns :class:`PoseSE3`; ``circle`` holds the circle index of
    each sample (``-1`` on transit legs between circles).
    """

    def __init__(self, t, position, orientation, velocity=None, circle=None):
        self.t = np.asarray(t, dtype=float)
        self.position = np.asarray(position, dtype=float).reshape(-1, 3)
        self.orientation = np.asarray(orientation, dtype=float).reshape(-1, 4)
        n = self.t.shape[0]
        self.velocity = (np.zeros((n, 3)) if velocity is None
                         else np.asarray(velocity, dtype=float).reshape(-1, 3))
        self.circle = (np.zeros(n, dtype=int) if circle is None
                       else np.asarray(circle, dtype=int))
        if not (self.position.shape[0] == self.orientation.shape[0] == n == self.circle.shape[0]):
            raise ValueError("trajectory columns have different lengths")

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trajectory(self.t[i], self.position[i], self.orientation[i],
                              self.velocity[i], self.circle[i])
        return PoseSE3(self.position[i], self.orientation[i], float(self.t[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def speed(self):
        return np.linalg.norm(self.velocity, axis=1)


def plan_circles(spec: TrajectorySpec, origin=(0.0, 0.0, 0.0)):
    """Circle plans in flight order: height, grid row, grid column, radius."""
    origin = vec3(origin)
    xs = (np.arange(spec.grid_cols) - (spec.grid_cols - 1) / 2) * spec.grid_spacing
    ys = (np.arange(spec.grid_rows) - (spec.grid_rows - 1) / 2) * spec.grid_spacing
    plans = []
    for h in spec.heights:
        for row, y in enumerate(ys):
            for col, x in enumerate(xs):
                for r in spec.circle_radii:
                    k = len(plans)
                    v = spec.speed_cycle[k % len(spec.speed_cycle)] if spec.speed_cycle else spec.speed
                    plans.append(CirclePlan(k, row, col, origin + np.array([x, y, h]), r, v,
                                            yaw_follows_velocity=spec.yaw_follows_velocity))
    return plans


def _sample_circle(plan, dt):
    n = int(np.floor(plan.period / dt + 1e-9)) + 1
    t = plan.start_time + dt * np.arange(n)
    pos, vel, _, q = plan.state(t)
    return t, pos, vel, q


def generate_circle_grid_trajectory(spec: TrajectorySpec, origin=(0.0, 0.0, 0.0),
                                    circles: Optional[Sequence[int]] = None):
    """Concatenate the planned circles, joined by straight transit legs.

    Transit legs are flown at ``spec.max_speed`` so every consecutive pair of
    samples respects the platform speed cap.
    """
    plans = plan_circles(spec, origin)
    if circles is not None:
        plans = [plans[i] for i in circles]
    dt = spec.sample_dt
    ts, ps, vs, qs, cs = [], [], [], [], []
    t_cursor = 0.0
    last = None
    for plan in plans:
        if last is not None:
            p_a, q_a = last
            p_b, q_b = plan.state(0.0)[0], plan.state(0.0)[3]
            length = float(np.linalg.norm(p_b - p_a))
            steps = max(1, int(np.ceil(length / (spec.max_speed * dt) - 1e-9)))
            frac = np.arange(1, steps)[:, None] / steps
            if steps > 1:
                ts.append(t_cursor + dt * np.arange(1, steps))
                ps.append(p_a + frac * (p_b - p_a))
                vs.append(np.broadcast_to((p_b - p_a) / (steps * dt), (steps - 1, 3)))
                qs.append(np.broadcast_to(q_a, (steps - 1, 4)))
                cs.append(np.full(steps - 1, -1))
            t_cursor += steps * dt
        timed = CirclePlan(plan.index, plan.row, plan.col, plan.center, plan.radius, plan.speed,
                           t_cursor, plan.yaw_follows_velocity)
        t, pos, vel, q = _sample_circle(timed, dt)
        ts.append(t)
        ps.append(pos)
        vs.append(vel)
        qs.append(q)
        cs.append(np.full(t.shape[0], plan.index))
        last = (pos[-1], q[-1])
        t_cursor = t[-1]
    return Trajectory(np.concatenate(ts), np.concatenate(ps), np.concatenate(qs),
                      np.concatenate(vs), np.concatenate(cs))


def wrap_angle_deg(a):
    """Wrap degrees into ``(-180, 180]``."""
    a = np.asarray(a, dtype=float)
    r = 180.0 - np.mod(180.0 - a, 360.0)
    r = np.where(r <= -180.0, r + 360.0, r)
    return float(r) if r.ndim == 0 else r


def direction_angles(delta):
    """Azimuth/elevation in degrees of (N, 3) or (3,) direction vectors."""
    delta = np.asarray(delta, dtype=float)
    horiz = np.hypot(delta[..., 0], delta[..., 1])
    az = np.where(horiz > 0, np.degrees(np.arctan2(delta[..., 1], delta[..., 0])), 0.0)
    el = np.degrees(np.arctan2(delta[..., 2], horiz))
    return wrap_angle_deg(az), el


def unit_vector(azimuth_deg, elevation_deg):
    az = np.radians(azimuth_deg)
    el = np.radians(elevation_deg)
    return np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1)


def relative_to_jammer(antenna_center, jammer) -> Relative:
    delta = vec3(jammer) - vec3(antenna_center)
    dist = float(np.linalg.norm(delta))
    if dist == 0.0:
        raise DegenerateGeometryError("antenna centre coincides with the jammer")
    az, el = direction_angles(delta)
    return Relative(delta, dist, float(az), float(el))


def delta_from_angles(distance, azimuth_deg, elevation_deg):
    return np.asarray(distance, dtype=float)[..., None] * unit_vector(azimuth_deg, elevation_deg)


def make_label(pose: PoseSE3, jammer_position, speed=0.0) -> LabelRecord:
    rel = relative_to_jammer(pose.position, jammer_position)
    return LabelRecord(pose.timestamp, rel.delta, rel.distance, rel.azimuth, rel.elevation, float(speed))


def body_frame_angles(delta_world, orientation):
    """Azimuth/elevation of a world-frame vector seen from the platform body frame."""
    d_body = quat.rotate(quat.conj(orientation), delta_world)
    return direction_angles(d_body)

"""IMU measurement simulation and strapdown dead reckoning.

Relative poses are expressed in the body frame of the first snapshot of
each window: ``dp_k = R_0^T (p_k - p_0)``, ``dq_k = q_0^* q_k``.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from . import quaternion as quat
from .errors import ConfigError, CoverageError, InsufficientDataError
from .geometry import Trajectory

GRAVITY = 9.80665
Z_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ImuNoiseModel:
    accel_white_sigma: float = 0.0     # m/s^2/sqrt(Hz)
    gyro_white_sigma: float = 0.0      # rad/s/sqrt(Hz)
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rate: float = 200.0

    def __post_init__(self):
        if self.accel_white_sigma < 0:
            raise ConfigError("accel_white_sigma", "must be >= 0")
        if self.gyro_white_sigma < 0:
            raise ConfigError("gyro_white_sigma", "must be >= 0")
        if not self.rate > 0:
            raise ConfigError("rate", "must be positive")
        object.__setattr__(self, "accel_bias", np.asarray(self.accel_bias, dtype=float).reshape(3))
        object.__setattr__(self, "gyro_bias", np.asarray(self.gyro_bias, dtype=float).reshape(3))

    def scaled(self, k):
        """Same model with every error term multiplied by ``k``."""
        return ImuNoiseModel(k * self.accel_white_sigma, k * self.gyro_white_sigma,
                             k * self.accel_bias, k * self.gyro_bias, self.rate)


@dataclass(frozen=True)
class ImuSample:
    timestamp: float
    specific_force: np.ndarray
    angular_rate: np.ndarray


class ImuStream:
    """Column-wise IMU samples; iterating yields :class:`ImuSample`."""

    def __init__(self, t, specific_force, angular_rate):
        self.t = np.asarray(t, dtype=float)
        self.specific_force = np.asarray(specific_force, dtype=float).reshape(-1, 3)
        self.angular_rate = np.asarray(angular_rate, dtype=float).reshape(-1, 3)
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("IMU timestamps must be strictly increasing")

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, i):
        return ImuSample(float(self.t[i]), self.specific_force[i], self.angular_rate[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["timestamp", "fx", "fy", "fz", "wx", "wy", "wz"])
            for t, f, g in zip(self.t, self.specific_force, self.angular_rate):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in (*f, *g)])

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1:4], data[:, 4:7])


@dataclass
class RelativePoseSet:
    base_timestamp: float
    positions: np.ndarray       # (K, 3)
    orientations: np.ndarray    # (K, 4)

    def __len__(self):
        return self.positions.shape[0]

    def as_array(self):
        """(K, 7) rows of ``dx, dy, dz, qw, qx, qy, qz``."""
        return np.hstack([self.positions, self.orientations])


def _resample(traj: Trajectory, rate):
    from scipy.interpolate import CubicSpline
    from scipy.spatial.transform import Rotation, Slerp

    t = np.arange(traj.t[0], traj.t[-1] + 0.5 / rate, 1.0 / rate)
    t = t[t <= traj.t[-1] + 1e-12]
    pos = CubicSpline(traj.t, traj.position, axis=0)(t)
    rot = Rotation.from_quat(traj.orientation[:, [1, 2, 3, 0]])
    q = Slerp(traj.t, rot)(np.clip(t, traj.t[0], traj.t[-1])).as_quat()[:, [3, 0, 1, 2]]
    return t, pos, q


def _second_difference(p, dt):
    a = np.empty_like(p)
    a[1:-1] = (p[2:] - 2 * p[1:-1] + p[:-2]) / dt ** 2
    if p.shape[0] >= 4:
        a[0] = (2 * p[0] - 5 * p[1] + 4 * p[2] - p[3]) / dt ** 2
        a[-1] = (2 * p[-1] - 5 * p[-2] + 4 * p[-3] - p[-4]) / dt ** 2
    else:
        a[0] = a[1]
        a[-1] = a[-2]
    return a


def _body_rates(q, dt):
    w = np.empty((q.shape[0], 3))
    rel = quat.multiply(quat.conj(q[:-2]), q[2:])
    w[1:-1] = quat.to_rotvec(rel) / (2 * dt)
    w[0] = quat.to_rotvec(quat.multiply(quat.conj(q[0]), q[1])) / dt
    w[-1] = quat.to_rotvec(quat.multiply(quat.conj(q[-2]), q[-1])) / dt
    return w


def simulate_imu(traj: Trajectory, noise: ImuNoiseModel = ImuNoiseModel(), gravity=GRAVITY,
                 seed=0) -> ImuStream:
    """Body-frame specific force and angular rate along a sampled trajectory.

    A trajectory not sampled uniformly at ``noise.rate`` is first resampled
    (cubic spline positions, slerp orientations).
    """
    if len(traj) < 3:
        raise InsufficientDataError("IMU simulation needs at least three poses")
    dt = 1.0 / noise.rate
    steps = np.diff(traj.t)
    if np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
        t, pos, q = traj.t, traj.position, traj.orientation
    else:
        t, pos, q = _resample(traj, noise.rate)
        if t.shape[0] < 3:
            raise InsufficientDataError("trajectory too short for the IMU rate")
    acc = _second_difference(pos, dt)
    rot = quat.to_matrix(q)
    f = np.einsum("nji,nj->ni", rot, acc + gravity * Z_UP)
    w = _body_rates(q, dt)
    rng = np.random.default_rng(seed)
    if noise.accel_white_sigma > 0:
        f = f + noise.accel_white_sigma * np.sqrt(noise.rate) * rng.standard_normal(f.shape)
    if noise.gyro_white_sigma > 0:
        w = w + noise.gyro_white_sigma * np.sqrt(noise.rate) * rng.standard_normal(w.shape)
    return ImuStream(t, f + noise.accel_bias, w + noise.gyro_bias)


def strapdown_relative_poses(imu: ImuStream, window, initial_velocity=(0.0, 0.0, 0.0),
                             gravity=GRAVITY, initial_orientation=quat.IDENTITY) -> RelativePoseSet:
    """Dead-reckon from ``window[0]`` and report poses at every window time.

    Orientation uses the midpoint rule on the angular rate; velocity and
    position use trapezoidal integration of the gravity-compensated,
    world-rotated specific force.  IMU samples are linearly interpolated
    onto the window times so the integration starts exactly at
    ``window[0]``.
    """
    window = np.atleast_1d(np.asarray(window, dtype=float))
    if window.size < 1:
        raise InsufficientDataError("window must contain at least one timestamp")
    if np.any(np.diff(window) < 0):
        raise ValueError("window timestamps must be non-decreasing")
    tol = 1e-9
    if window[0] < imu.t[0] - tol or window[-1] > imu.t[-1] + tol:
        raise CoverageError(f"window [{window[0]:.6f}, {window[-1]:.6f}] s outside IMU coverage "
                            f"[{imu.t[0]:.6f}, {imu.t[-1]:.6f}] s")
    inside = imu.t[(imu.t > window[0] + tol) & (imu.t < window[-1] - tol)]
    grid = np.unique(np.concatenate([window, inside]))
    f = np.column_stack([np.interp(grid, imu.t, imu.specific_force[:, i]) for i in range(3)])
    w = np.column_stack([np.interp(grid, imu.t, imu.angular_rate[:, i]) for i in range(3)])

    q0 = quat.normalize(initial_orientation)
    n = grid.shape[0]
    h = np.diff(grid)
    dqs = quat.from_rotvec(0.5 * (w[:-1] + w[1:]) * h[:, None])
    q = np.empty((n, 4))
    q[0] = q0
    # the attitude recursion is sequential; plain floats keep it cheap
    cw, cx, cy, cz = (float(c) for c in q0)
    for k, (dw, dx, dy, dz) in enumerate(dqs.tolist()):
        cw, cx, cy, cz = (cw * dw - cx * dx - cy * dy - cz * dz,
                          cw * dx + cx * dw + cy * dz - cz * dy,
                          cw * dy - cx * dz + cy * dw + cz * dx,
                          cw * dz + cx * dy - cy * dx + cz * dw)
        norm = (cw * cw + cx * cx + cy * cy + cz * cz) ** 0.5
        cw, cx, cy, cz = cw / norm, cx / norm, cy / norm, cz / norm
        q[k + 1] = (cw, cx, cy, cz)
    a = quat.rotate(q, f) - gravity * Z_UP
    v = np.empty((n, 3))
    p = np.empty((n, 3))
    v[0], p[0] = np.asarray(initial_velocity, dtype=float), 0.0
    v[1:] = v[0] + np.cumsum(0.5 * (a[:-1] + a[1:]) * h[:, None], axis=0)
    p[1:] = np.cumsum(0.5 * (v[:-1] + v[1:]) * h[:, None], axis=0)

    idx = np.searchsorted(grid, window)
    r0t = quat.to_matrix(q0).T
    rel_p = (p[idx] - p[idx[0]]) @ r0t.T
    rel_q = quat.normalize(quat.multiply(quat.conj(q0), q[idx]))
    rel_p[0] = 0.0
    rel_q[0] = quat.IDENTITY
    return RelativePoseSet(float(window[0]), rel_p, rel_q)


def relative_poses_from_truth(positions, orientations, base_timestamp=0.0) -> RelativePoseSet:
    """Relative poses from ground-truth (positioning-system) poses."""
    positions = np.asarray(positions, dtype=float)
    orientations = quat.normalize(orientations)
    r0t = quat.to_matrix(orientations[0]).T
    rel_p = (positions - positions[0]) @ r0t.T
    rel_q = quat.normalize(quat.multiply(quat.conj(orientations[0]), orientations))
    rel_q[0] = quat.IDENTITY
    return RelativePoseSet(float(base_timestamp), rel_p, rel_q)

import numpy as np
import pytest

from jamdf import quaternion as quat
from jamdf.errors import ConfigError, CoverageError, InsufficientDataError
from jamdf.geometry import CirclePlan, Trajectory
from jamdf.imu import (GRAVITY, ImuNoiseModel, ImuStream, relative_poses_from_truth, simulate_imu,
                       strapdown_relative_poses)


def circle_traj(radius=1.0, speed=0.3, rate=200.0, duration=None, yaw=True):
    plan = CirclePlan(0, 0, 0, np.array([0.0, 0.0, 4.0]), radius, speed, yaw_follows_velocity=yaw)
    duration = plan.period if duration is None else duration
    t = np.arange(int(round(duration * rate)) + 1) / rate
    pos, vel, _, q = plan.state(t)
    return plan, Trajectory(t, pos, q, vel)


def window_error(rate, snap_dt=0.2, k=5, yaw=True, noise=ImuNoiseModel(), seed=0):
    noise = ImuNoiseModel(noise.accel_white_sigma, noise.gyro_white_sigma, noise.accel_bias,
                          noise.gyro_bias, rate)
    plan, traj = circle_traj(rate=rate, duration=3.0, yaw=yaw)
    imu = simulate_imu(traj, noise, seed=seed)
    window = 0.5 + snap_dt * np.arange(k)
    pos, vel, _, q = plan.state(window)
    est = strapdown_relative_poses(imu, window, vel[0], initial_orientation=q[0])
    ref = relative_poses_from_truth(pos, q)
    return np.linalg.norm(est.positions - ref.positions, axis=1).max(), est, ref


def test_static_specific_force_is_gravity():
    t = np.arange(100) / 200.0
    traj = Trajectory(t, np.tile([1.0, 2.0, 3.0], (100, 1)), np.tile(quat.IDENTITY, (100, 1)))
    imu = simulate_imu(traj)
    np.testing.assert_allclose(imu.specific_force, np.tile([0, 0, GRAVITY], (100, 1)), atol=1e-9)
    np.testing.assert_allclose(imu.angular_rate, 0, atol=1e-12)


def test_circle_centripetal_acceleration():
    _, traj = circle_traj(yaw=False)
    f = simulate_imu(traj).specific_force
    horiz = np.linalg.norm(f[:, :2], axis=1)
    np.testing.assert_allclose(horiz, 0.3 ** 2 / 1.0, rtol=1e-4)
    np.testing.assert_allclose(f[:, 2], GRAVITY, atol=1e-9)


def test_yaw_rate_matches_angular_rate():
    plan, traj = circle_traj()
    w = simulate_imu(traj).angular_rate
    np.testing.assert_allclose(w[:, 2], plan.angular_rate, rtol=1e-9)


def test_white_noise_std(rng):
    t = np.arange(20000) / 200.0
    traj = Trajectory(t, np.zeros((20000, 3)), np.tile(quat.IDENTITY, (20000, 1)))
    imu = simulate_imu(traj, ImuNoiseModel(0.01, 0.002, rate=200.0), seed=3)
    want_a, want_g = 0.01 * np.sqrt(200), 0.002 * np.sqrt(200)
    assert np.std(imu.specific_force[:, 0]) == pytest.approx(want_a, rel=0.03)
    assert np.std(imu.angular_rate[:, 2]) == pytest.approx(want_g, rel=0.03)


def test_bias_is_added():
    t = np.arange(50) / 200.0
    traj = Trajectory(t, np.zeros((50, 3)), np.tile(quat.IDENTITY, (50, 1)))
    imu = simulate_imu(traj, ImuNoiseModel(accel_bias=[0.1, 0, 0], gyro_bias=[0, 0, 0.01]))
    np.testing.assert_allclose(imu.specific_force[:, 0], 0.1)
    np.testing.assert_allclose(imu.angular_rate[:, 2], 0.01)


def test_negative_sigma_rejected():
    with pytest.raises(ConfigError):
        ImuNoiseModel(accel_white_sigma=-1)


def test_zero_input_stays_put():
    t = np.arange(201) / 200.0
    imu = ImuStream(t, np.tile([0, 0, GRAVITY], (201, 1)), np.zeros((201, 3)))
    rp = strapdown_relative_poses(imu, [0.0, 0.3, 0.7, 1.0])
    np.testing.assert_allclose(rp.positions, 0, atol=1e-12)
    np.testing.assert_allclose(rp.orientations, np.tile(quat.IDENTITY, (4, 1)), atol=1e-12)


def test_constant_velocity_integration():
    t = np.arange(201) / 200.0
    imu = ImuStream(t, np.tile([0, 0, GRAVITY], (201, 1)), np.zeros((201, 3)))
    rp = strapdown_relative_poses(imu, [0.0, 1.0], initial_velocity=[0.2, -0.1, 0.0])
    np.testing.assert_allclose(rp.positions[1], [0.2, -0.1, 0.0], atol=1e-12)


def test_strapdown_circle_under_one_centimetre():
    err, est, _ = window_error(200.0)
    assert err < 0.01
    assert est.positions.shape == (5, 3) and est.orientations.shape == (5, 4)
    np.testing.assert_allclose(np.linalg.norm(est.orientations, axis=1), 1, atol=1e-12)
    np.testing.assert_array_equal(est.positions[0], 0)


def test_higher_rate_is_more_accurate():
    assert window_error(400.0)[0] < window_error(100.0)[0]


def test_error_grows_with_noise_scale():
    base = ImuNoiseModel(0.002, 0.0005)
    errs = []
    for k in (1, 4, 16):
        errs.append(np.median([window_error(200.0, noise=base.scaled(k), seed=s)[0] for s in range(10)]))
    assert errs[0] < errs[1] < errs[2]


def test_rotation_is_in_first_body_frame():
    _, est, ref = window_error(200.0)
    np.testing.assert_allclose(est.orientations, ref.orientations, atol=1e-6)


def test_coverage_error():
    t = np.arange(11) / 10.0
    imu = ImuStream(t, np.zeros((11, 3)), np.zeros((11, 3)))
    with pytest.raises(CoverageError):
        strapdown_relative_poses(imu, [0.5, 1.5])
    with pytest.raises(InsufficientDataError):
        strapdown_relative_poses(imu, [])


def test_simulate_needs_three_poses():
    traj = Trajectory([0.0, 0.005], np.zeros((2, 3)), np.tile(quat.IDENTITY, (2, 1)))
    with pytest.raises(InsufficientDataError):
        simulate_imu(traj)


def test_resampling_non_uniform_trajectory():
    plan, traj = circle_traj(rate=50.0, duration=2.0, yaw=False)
    imu = simulate_imu(traj, ImuNoiseModel(rate=200.0))
    assert np.allclose(np.diff(imu.t), 1 / 200.0)
    np.testing.assert_allclose(np.linalg.norm(imu.specific_force[2:-2, :2], axis=1), 0.09, rtol=1e-3)


def test_csv_round_trip(tmp_path):
    _, traj = circle_traj(duration=0.5)
    imu = simulate_imu(traj, ImuNoiseModel(0.01, 0.001), seed=1)
    imu.to_csv(tmp_path / "imu.csv")
    back = ImuStream.from_csv(tmp_path / "imu.csv")
    np.testing.assert_array_equal(back.t, imu.t)
    np.testing.assert_array_equal(back.specific_force, imu.specific_force)
    np.testing.assert_array_equal(back.angular_rate, imu.angular_rate)
    assert len(back) == len(imu) and back[0].timestamp == imu.t[0]

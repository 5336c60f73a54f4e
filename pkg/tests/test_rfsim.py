import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jamdf import geometry as g, rfsim
from jamdf.errors import AliasingError, BoundsError, ConfigError, DegenerateGeometryError
from jamdf.spectral import stft_spectrogram

CFG = rfsim.RecordingConfig()
JAM = g.JammerSpec([3.0, 2.0, 0.3])
POSE = g.PoseSE3([0.0, 0.0, 4.0])


def inst_freq(x, fs):
    return np.angle(x[1:] * np.conj(x[:-1])) * fs / (2 * np.pi)


def test_chirp_starts_at_minus_half_bandwidth_and_stays_in_band():
    fs = CFG.sample_rate
    x = rfsim.gen_chirp_baseband(JAM, 4096, fs)
    f = inst_freq(x, fs)
    # first difference spans [0, 1/fs]: midpoint frequency of a linear sweep
    slope = JAM.bandwidth / JAM.sweep_period
    assert f[0] == pytest.approx(-JAM.bandwidth / 2 + slope / (2 * fs), rel=1e-9)
    assert np.all(np.abs(f) <= JAM.bandwidth / 2 + 1e-6)
    assert JAM.bandwidth / 2 < fs / 2
    np.testing.assert_allclose(np.abs(x), 1.0, rtol=1e-14)


def test_chirp_continuity_across_snapshots():
    fs = CFG.sample_rate
    a = rfsim.gen_chirp_baseband(JAM, 2000, fs, t0=0.0)
    b = rfsim.gen_chirp_baseband(JAM, 1000, fs, t0=1000 / fs)
    np.testing.assert_allclose(a[1000:], b, atol=1e-9)


def test_chirp_ridge_slope_matches_sweep_rate():
    fs = CFG.sample_rate
    jam = g.JammerSpec([1, 0, 0], bandwidth=20e6, sweep_period=200e-6)
    x = rfsim.gen_chirp_baseband(jam, int(round(190e-6 * fs)), fs)
    sg = stft_spectrogram(x[None, :], 256, 32, scale="power", fs=fs)
    peak = np.argmax(sg.values[0], axis=0)
    f = sg.freqs[peak]
    slope = np.polyfit(sg.times, f, 1)[0]
    assert slope == pytest.approx(jam.bandwidth / jam.sweep_period, rel=0.05)


def test_aliasing_rejected():
    with pytest.raises(AliasingError):
        rfsim.gen_chirp_baseband(g.JammerSpec([1, 0, 0], bandwidth=50e6), 100, 40.96e6)


def test_triangular_sweep_is_continuous_and_in_band():
    jam = g.JammerSpec([1, 0, 0], sweep_shape="triangular")
    x = rfsim.gen_chirp_baseband(jam, 4096, CFG.sample_rate)
    f = inst_freq(x, CFG.sample_rate)
    assert np.all(np.abs(f) <= jam.bandwidth / 2 + 1e-6)
    assert np.max(np.abs(np.diff(f))) < 2 * jam.bandwidth / jam.sweep_period / CFG.sample_rate * 1.01


def test_steering_phase_direct_evaluation():
    geom = g.ArrayGeometry(np.array([[0.09, 0, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0]]))
    a = rfsim.array_steering_vector(geom, POSE, [1.0, 0, 0], g.GPS_L1)
    lam = g.SPEED_OF_LIGHT / g.GPS_L1
    assert lam == pytest.approx(0.190294, abs=1e-6)
    assert np.angle(a[0]) == pytest.approx(2 * np.pi * 0.09 / lam, abs=1e-12)
    assert np.angle(a[0]) == pytest.approx(2.97166, abs=1e-5)


def test_broadside_steering_and_unit_modulus(rng):
    a = rfsim.array_steering_vector(g.ArrayGeometry.square(), POSE, [0, 0, -1.0], g.GPS_L1)
    np.testing.assert_allclose(a / a[0], 1.0)
    d = rng.standard_normal((20, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    m = rfsim.steering_matrix(g.ArrayGeometry.square().element_offsets, d, g.GPS_L1)
    np.testing.assert_allclose(np.abs(m), 1.0, rtol=1e-14)
    with pytest.raises(DegenerateGeometryError):
        rfsim.array_steering_vector(g.ArrayGeometry.square(), POSE, [0, 0, 0], g.GPS_L1)


def test_default_snapshot_shape_and_determinism():
    scene = rfsim.Scene(JAM, rfsim.ChannelModel(rfsim.hall_reflectors(), noise_power=1e-4))
    s1 = rfsim.synth_snapshot(scene, POSE, CFG, seed=3, index=1)
    s2 = rfsim.synth_snapshot(scene, POSE, CFG, seed=3, index=1)
    assert s1.channels.shape == (4, 122_880)
    np.testing.assert_array_equal(s1.channels, s2.channels)
    assert np.all(np.isfinite(s1.channels))


def test_los_phase_differences_match_steering():
    scene = rfsim.Scene(JAM)
    s = rfsim.synth_snapshot(scene, POSE, CFG, n_samples=2048)
    u = (JAM.position - POSE.position) / np.linalg.norm(JAM.position - POSE.position)
    a = rfsim.array_steering_vector(scene.geometry, POSE, u, JAM.center_frequency)
    meas = np.angle(s.channels[1:] * np.conj(s.channels[:1])).mean(axis=1)
    want = np.angle(a[1:] * np.conj(a[0]))
    np.testing.assert_allclose(meas, want, atol=1e-6)


def test_noise_free_los_covariance_rank_one():
    s = rfsim.synth_snapshot(rfsim.Scene(JAM), POSE, CFG, n_samples=1024)
    w = np.linalg.eigvalsh(s.channels @ s.channels.conj().T / 1024)
    assert w[-2] / w[-1] < 1e-9


def test_configured_snr_is_recovered():
    base = rfsim.Scene(JAM)
    sig = rfsim.render_signal(base, POSE, CFG)
    p_noise = rfsim.noise_power_for_snr(sig, 10.0)
    noise_only = rfsim.synth_snapshot(rfsim.Scene(g.JammerSpec(JAM.position, power_dbm=-200),
                                                  rfsim.ChannelModel(noise_power=p_noise)), POSE, CFG, seed=9)
    snr = 10 * np.log10(np.mean(np.abs(sig) ** 2) / np.mean(np.abs(noise_only.channels) ** 2))
    assert abs(snr - 10.0) < 0.5


@pytest.mark.parametrize("ple", [1.0, 2.0])
def test_distance_doubling_loss(ple):
    ch = rfsim.ChannelModel(path_loss_exponent=ple)
    p = []
    for d in (3.0, 6.0):
        jam = g.JammerSpec([d, 0, 4.0])
        x = rfsim.render_signal(rfsim.Scene(jam, ch), g.PoseSE3([0, 0, 4.0]), CFG, 1024)
        p.append(np.mean(np.abs(x) ** 2))
    assert 10 * np.log10(p[0] / p[1]) == pytest.approx(ple * 6.0206, abs=0.1)


def test_image_behind_plane_is_skipped():
    wall = rfsim.Reflector([5, 0, 0], [-1, 0, 0], 0.5)
    scene = rfsim.Scene(g.JammerSpec([6, 0, 0]), rfsim.ChannelModel([wall]))
    assert len(rfsim.propagation_paths(scene, np.array([0.0, 0, 0]))) == 1
    scene = rfsim.Scene(g.JammerSpec([3, 0, 0]), rfsim.ChannelModel([wall]))
    paths = rfsim.propagation_paths(scene, np.array([0.0, 0, 0]))
    np.testing.assert_allclose(paths[1][0], [7, 0, 0])


def test_degenerate_pose_rejected():
    with pytest.raises(DegenerateGeometryError):
        rfsim.render_signal(rfsim.Scene(g.JammerSpec([0, 0, 4.0])), POSE, CFG, 16)


def test_crop_window():
    s = rfsim.synth_snapshot(rfsim.Scene(JAM), POSE, CFG, n_samples=4096)
    c = rfsim.crop_window(s, 0, 1024)
    np.testing.assert_array_equal(c.channels, s.channels[:, :1024])
    assert 1024 / CFG.sample_rate == pytest.approx(25e-6)
    c = rfsim.crop_window(s, 100, 1024)
    assert c.timestamp == pytest.approx(s.timestamp + 100 / CFG.sample_rate)
    with pytest.raises(BoundsError):
        rfsim.crop_window(s, 3500, 1024)


def test_reflector_gain_validated():
    with pytest.raises(ConfigError):
        rfsim.Reflector([0, 0, 0], [0, 0, 1], 1.5)


@settings(max_examples=25)
@given(st.floats(-12, 12), st.floats(-8, 8), st.floats(0.1, 2.5), st.floats(10e6, 25e6),
       st.floats(5e-6, 100e-6), st.floats(0, 1e-2))
def test_output_always_finite(x, y, z, bw, period, noise):
    scene = rfsim.Scene(g.JammerSpec([x, y, z], bandwidth=bw, sweep_period=period),
                        rfsim.ChannelModel(rfsim.hall_reflectors(), noise_power=noise))
    s = rfsim.synth_snapshot(scene, g.PoseSE3([0.5, -0.3, 4.3]), CFG, n_samples=512)
    assert np.all(np.isfinite(s.channels))

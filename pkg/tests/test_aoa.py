import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jamdf import aoa, geometry as g, rfsim
from jamdf.errors import InsufficientDataError, NumericalError, ShapeError

GEOM = g.ArrayGeometry.square()
GRID = aoa.AngleGrid.default()
CFG = rfsim.RecordingConfig()


def los_window(az, el, dist=8.0, n=1024, noise=0.0, seed=0, pose=None):
    pose = pose or g.PoseSE3([0.0, 0.0, 4.0])
    jam = pose.position + g.delta_from_angles(dist, az, el)
    scene = rfsim.Scene(g.JammerSpec(jam), rfsim.ChannelModel(noise_power=noise))
    return rfsim.synth_snapshot(scene, pose, CFG, seed=seed, n_samples=n)


def test_covariance_single_sample_is_outer_product(rng):
    x = rng.standard_normal((4, 1)) + 1j * rng.standard_normal((4, 1))
    r = aoa.spatial_covariance(x)
    np.testing.assert_allclose(r.matrix, x @ x.conj().T)
    assert np.linalg.matrix_rank(r.matrix) == 1


def test_covariance_hermitian_psd(rng):
    x = rng.standard_normal((4, 300)) + 1j * rng.standard_normal((4, 300))
    r = aoa.spatial_covariance(x).matrix
    np.testing.assert_allclose(r, r.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(r).min() >= -1e-12
    with pytest.raises(InsufficientDataError):
        aoa.spatial_covariance(np.zeros((4, 0)))
    with pytest.raises(ShapeError):
        aoa.spatial_covariance(np.zeros((3, 10)))


def test_noise_free_source_rank_one():
    w = np.linalg.eigvalsh(aoa.spatial_covariance(los_window(30, -40)).matrix)
    assert w[-2] / w[-1] < 1e-9


def test_jacobi_matches_lapack_oracle(rng):
    for _ in range(200):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = a @ a.conj().T
        w, v = aoa.hermitian_eigh(h)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(h), atol=1e-12 * np.abs(w).max())
        np.testing.assert_allclose(h @ v, v * w, atol=1e-11 * np.abs(w).max())
        np.testing.assert_allclose(v.conj().T @ v, np.eye(4), atol=1e-12)


def test_jacobi_eigenvalues_are_characteristic_roots(rng):
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = (a + a.conj().T) / 2
    w, _ = aoa.hermitian_eigh(h)
    for lam in w:
        assert abs(np.linalg.det(h - lam * np.eye(4))) < 1e-9 * np.abs(w).max() ** 4


@pytest.mark.parametrize("method", aoa.METHODS)
def test_single_source_argmax(method):
    res = aoa.beamscan(aoa.spatial_covariance(los_window(30, -40)), GEOM, GRID, method=method)
    assert abs(res.azimuth - 30) <= 1 and abs(res.elevation + 40) <= 1
    assert res.spectrum.shape == GRID.shape


def test_music_equals_bartlett_argmax():
    r = aoa.spatial_covariance(los_window(-117.3, -22.6))
    m = aoa.beamscan(r, GEOM, GRID, method="music")
    b = aoa.beamscan(r, GEOM, GRID, method="bartlett")
    assert (m.azimuth, m.elevation) == (b.azimuth, b.elevation)


@pytest.mark.parametrize("method", aoa.METHODS)
def test_scale_and_phase_invariance(method):
    w = los_window(75, -30, noise=1e-4)
    r = aoa.spatial_covariance(w).matrix
    base = aoa.beamscan(r, GEOM, GRID, method=method)
    scaled = aoa.beamscan(7.5 * r, GEOM, GRID, method=method)
    rot = aoa.beamscan(aoa.spatial_covariance(w.channels * np.exp(1j * 1.1)), GEOM, GRID, method=method)
    assert (base.azimuth, base.elevation) == (scaled.azimuth, scaled.elevation)
    np.testing.assert_allclose(base.spectrum, rot.spectrum, rtol=1e-9)


def test_music_residual_at_truth():
    pose = g.PoseSE3([0.0, 0.0, 4.0])
    w = los_window(10, -55, pose=pose)
    a = rfsim.array_steering_vector(GEOM, pose, g.unit_vector(10, -55), g.GPS_L1)
    assert aoa.music_residual(aoa.spatial_covariance(w), a) < 1e-9


def test_capon_heavy_loading_tends_to_bartlett():
    r = aoa.spatial_covariance(los_window(-60, -20, noise=1e-3)).matrix
    tr = np.real(np.trace(r))
    c = aoa.beamscan(r, GEOM, GRID, method="capon", loading=1e3 * tr / 4)
    b = aoa.beamscan(r, GEOM, GRID, method="bartlett")
    assert (c.azimuth, c.elevation) == (b.azimuth, b.elevation)


def test_singular_capon_without_loading_raises():
    r = aoa.spatial_covariance(los_window(0, -45)).matrix
    r = np.outer(r[:, 0], r[:, 0].conj())   # exactly rank one
    with pytest.raises(NumericalError):
        aoa.beamscan(r, GEOM, GRID, method="capon", loading=0.0)


def test_source_count_validation():
    r = np.eye(4)
    with pytest.raises(ValueError):
        aoa.beamscan(r, GEOM, GRID, method="music", source_count=4)


def test_grid_tie_break_lowest_azimuth_then_elevation():
    grid = aoa.AngleGrid(np.array([-10.0, 0.0, 10.0]), np.array([-20.0, -10.0]))
    assert grid.argmax(np.ones(grid.shape)) == (-10.0, -20.0)


def test_pairwise_features_identical_channels(rng):
    x = np.tile(rng.standard_normal(256) + 1j * rng.standard_normal(256), (4, 1))
    f = aoa.pairwise_phase_features(x)
    np.testing.assert_allclose(f.mean_phase, 0, atol=1e-12)
    np.testing.assert_allclose(f.circular_std, 0, atol=1e-6)
    assert aoa.PAIRS == ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def test_pairwise_phases_equal_steering_phases():
    pose = g.PoseSE3([0.0, 0.0, 4.0])
    w = los_window(40, -35, pose=pose)
    a = rfsim.array_steering_vector(GEOM, pose, g.unit_vector(40, -35), g.GPS_L1)
    f = aoa.pairwise_phase_features(w)
    want = [np.angle(a[i] * np.conj(a[j])) for i, j in aoa.PAIRS]
    np.testing.assert_allclose(f.mean_phase, want, atol=1e-6)


def test_zero_power_channel_named():
    x = np.ones((4, 16), dtype=complex)
    x[2] = 0
    with pytest.raises(NumericalError, match="channel 2"):
        aoa.pairwise_phase_features(x)


def test_feature_vector_layout_and_determinism():
    w = los_window(-150, -60, noise=1e-5, seed=4)
    f1 = aoa.assemble_aoa_features(w)
    f2 = aoa.assemble_aoa_features(w)
    assert f1.shape == (aoa.N_FEATURES,) == (22,)
    np.testing.assert_array_equal(f1, f2)
    assert f1[16] * 180 == pytest.approx(-150, abs=1.5)


@settings(max_examples=100)
@given(st.integers(0, 2**31))
def test_random_noise_features_bounded(seed):
    r = np.random.default_rng(seed)
    x = r.standard_normal((4, 1024)) + 1j * r.standard_normal((4, 1024))
    f = aoa.assemble_aoa_features(x * 10 ** r.uniform(-3, 3))
    assert np.all(np.isfinite(f)) and np.all(np.abs(f) <= 1)


def test_spectrum_csv(tmp_path):
    grid = aoa.AngleGrid(np.arange(-170.0, 181, 10), np.arange(-90.0, 1, 10))
    res = aoa.beamscan(aoa.spatial_covariance(los_window(20, -30)), GEOM, grid, method="bartlett")
    res.to_csv(tmp_path / "spec.csv")
    rows = np.loadtxt(tmp_path / "spec.csv", delimiter=",", skiprows=1)
    assert rows.shape == (grid.shape[0] * grid.shape[1], 3)

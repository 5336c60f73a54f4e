import numpy as np
import pytest
from hypothesis import given, strategies as st

from jamdf.aoa import AngleGrid, beamscan, spatial_covariance
from jamdf.errors import ConfigError, InsufficientDataError, ShapeError
from jamdf.evaluation import (Constant, MetricsReport, azimuth_error, binned_error_analysis, check_compatible,
                              format_table, mae_report, per_sample_errors, prior_mean_baseline, reports_to_csv)
from jamdf.geometry import ArrayGeometry, JammerSpec, PoseSE3, make_label
from jamdf.rfsim import ChannelModel, RecordingConfig, Reflector, Scene, synth_snapshot

angles = st.floats(-720, 720, allow_nan=False)


def test_azimuth_error_examples():
    assert azimuth_error(359, 1) == 2
    assert azimuth_error(-179, 179) == 2
    assert azimuth_error(90, -90) == 180
    assert azimuth_error(10, 10) == 0


@given(angles, angles)
def test_azimuth_error_properties(a, b):
    e = azimuth_error(a, b)
    assert 0 <= e <= 180
    assert e == pytest.approx(azimuth_error(b, a), abs=1e-9)
    assert e == pytest.approx(azimuth_error(a + 360, b), abs=1e-9)


def test_per_sample_distance_uses_norms():
    d, a, e = per_sample_errors([[3.0, 4.0, 0.0]], [350.0], [-10.0], [[0.0, 0.0, 6.0]], [10.0], [-30.0])
    np.testing.assert_allclose(d, [1.0])
    np.testing.assert_allclose(a, [20.0])
    np.testing.assert_allclose(e, [20.0])


def test_mae_report_and_validation():
    labels = Constant(np.zeros((2, 3)) + [1, 0, 0], np.array([0.0, 180.0]), np.array([-10.0, -20.0]))
    pred = Constant(np.zeros((2, 3)) + [2, 0, 0], np.array([10.0, -170.0]), np.array([-10.0, -10.0]))
    r = mae_report(pred, labels, "x")
    assert r.row() == pytest.approx((1.0, 10.0, 5.0)) and r.n == 2
    with pytest.raises(ShapeError):
        mae_report(Constant(np.zeros((1, 3)), np.zeros(1), np.zeros(1)), labels)
    empty = Constant(np.zeros((0, 3)), np.zeros(0), np.zeros(0))
    with pytest.raises(InsufficientDataError):
        mae_report(empty, empty)


def test_prior_baseline_uses_circular_mean():
    train = Constant(np.array([[1.0, 0, 0], [3.0, 0, 0]]), np.array([170.0, -170.0]), np.array([-10.0, -30.0]))
    base = prior_mean_baseline(train, 4)
    assert abs(base.azimuth[0]) == pytest.approx(180)
    np.testing.assert_allclose(base.delta, np.tile([2.0, 0, 0], (4, 1)))
    np.testing.assert_allclose(base.elevation, -20)


def test_single_bin():
    b = binned_error_analysis([1.0, 2.0, 6.0], [0.11, 0.12, 0.14], 0.05)
    assert b.count.tolist() == [3] and b.mean[0] == pytest.approx(3.0)
    np.testing.assert_allclose(b.edges, [0.1, 0.15])


def test_edge_values_go_up():
    b = binned_error_analysis([1.0, 2.0], [0.25, 0.3], 0.05)
    np.testing.assert_allclose(b.edges, [0.25, 0.3, 0.35])
    assert b.count.tolist() == [1, 1]


def test_absent_bins_are_flagged():
    b = binned_error_analysis([1.0, 3.0], [0.5, 3.5], 1.0, "distance")
    assert b.count.tolist() == [1, 0, 0, 1]
    assert np.isnan(b.mean[1]) and b.present.tolist() == [True, False, False, True]
    lines = b.to_csv().splitlines()
    assert lines[0] == "bin_lo,bin_hi,count,mean_error,present"
    assert lines[2] == "1,2,0,,0"


def test_bins_recompose_overall_mean(rng):
    err = rng.exponential(3.0, 1000)
    x = rng.uniform(0, 0.3, 1000)
    b = binned_error_analysis(err, x, 0.05)
    ok = b.present
    assert np.sum(b.mean[ok] * b.count[ok]) / b.count.sum() == pytest.approx(err.mean(), abs=1e-12)
    assert b.count.sum() == 1000


def test_binned_csv_is_byte_stable(rng, tmp_path):
    err, x = rng.exponential(size=50), rng.uniform(0, 10, 50)
    binned_error_analysis(err, x, 1.0).to_csv(tmp_path / "a.csv")
    binned_error_analysis(err.copy(), x.copy(), 1.0).to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_binning_validation():
    with pytest.raises(ConfigError):
        binned_error_analysis([1.0], [1.0], 0.0)
    with pytest.raises(ShapeError):
        binned_error_analysis([1.0, 2.0], [1.0], 1.0)
    assert binned_error_analysis([], [], 1.0).count.size == 0


def test_table_and_csv():
    reps = [MetricsReport(1.234, 5.678, 9.1011, 10, "fusion"), MetricsReport(2.0, 3.0, 4.0, 10, "prior")]
    table = format_table(reps, title="results")
    lines = table.splitlines()
    assert lines[0] == "results" and "Distance [m]" in lines[1] and "Azimuth [deg]" in lines[1]
    assert "1.234" in lines[3] and "prior" in lines[4]
    text = reports_to_csv(reps)
    assert text.splitlines()[1] == "fusion,1.234,5.678,9.1011,10"


def test_config_mismatch():
    check_compatible({"features": {"window": 1024}}, {"features": {"window": 1024}, "jammer": "B"})
    with pytest.raises(ConfigError, match="window"):
        check_compatible({"features": {"window": 1024}}, {"features": {"window": 512}})


def _music_errors(scene, positions):
    grid, array = AngleGrid.default(), ArrayGeometry.square()
    out = []
    for i, p in enumerate(positions):
        pose = PoseSE3(p)
        truth = make_label(pose, scene.jammer.position)
        win = synth_snapshot(scene, pose, RecordingConfig(), seed=i, n_samples=1024)
        out.append((truth.distance, azimuth_error(beamscan(spatial_covariance(win), array, grid).azimuth,
                                                  truth.azimuth)))
    return np.array(out)


def test_near_windows_err_more_with_jammer_side_multipath():
    # A cabinet face 0.8 m behind the jammer: its image source sits 1.6 m away,
    # which subtends a wide angle from close range and a narrow one from afar.
    rng = np.random.default_rng(5)
    jam = JammerSpec([0.0, 0.0, 0.3])
    cabinet = Reflector((-0.8, 0.0, 0.0), (1.0, 0.0, 0.0), 0.6)
    r = np.concatenate([rng.uniform(1.5, 6.0, 60), rng.uniform(8.0, 14.0, 60)])
    th = rng.uniform(-np.pi / 2, np.pi / 2, r.size)          # cabinet-facing side only
    pos = np.column_stack([r * np.cos(th), r * np.sin(th), rng.uniform(3.3, 4.8, r.size)])
    for reflectors, expect_near_worse in (([cabinet], True), ([], None)):
        errs = _music_errors(Scene(jam, ChannelModel(reflectors, noise_power=1e-4)), pos)
        bins = binned_error_analysis(errs[:, 1], errs[:, 0], 7.5, "distance")
        near, far = bins.mean                 # [0, 7.5) and [7.5, 15) m
        if expect_near_worse:
            assert near >= far
        else:
            assert max(near, far) < 1.0       # free space: both small, no trend claimed

"""Campaign simulation and featurisation.

A campaign flies a subset of the planned circles.  On each circle a run of
``windows_per_circle + temporal - 1`` snapshots is recorded at the snapshot
interval; every snapshot from index ``temporal - 1`` on closes one window
of ``temporal`` consecutive snapshots.  A window's features come from its
last snapshot (spectrogram, IQ crop, AoA features) plus the relative poses
of all its snapshots; its label is the ground truth at the last snapshot.
Windows never straddle circles.
"""
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .aoa import AngleGrid, N_FEATURES, assemble_aoa_features
from .aperture import ApertureBuffer, backprojection_map
from .config import FeatureSpec, ScenarioConfig
from .dataset import SnapshotRecord, interpolate_labels, manifest_for
from .errors import FormatError, InsufficientDataError
from .geometry import LabelRecord, PoseSE3, Trajectory, plan_circles, relative_to_jammer
from .imu import relative_poses_from_truth, simulate_imu, strapdown_relative_poses
from .rfsim import SnapshotIQ, crop_window, synth_snapshot
from .spectral import get_taper, stft_spectrogram

log = logging.getLogger(__name__)

CIRCLE_TIME_BASE_S = 1000.0   # every circle gets its own clock origin
FEATURE_KEYS = ("spectro", "iq", "aoa", "poses")


def select_circles(cfg: ScenarioConfig):
    plans = plan_circles(cfg.trajectory, cfg.origin)
    camp = cfg.campaign
    if camp.circles is not None:
        idx = [int(i) for i in camp.circles]
        bad = [i for i in idx if not 0 <= i < len(plans)]
        if bad:
            raise InsufficientDataError(f"circle indices {bad} outside the {len(plans)} planned circles")
    elif camp.n_circles is not None:
        if not 1 <= camp.n_circles <= len(plans):
            raise InsufficientDataError(f"n_circles={camp.n_circles} but only {len(plans)} circles planned")
        rng = np.random.default_rng([cfg.seed, 3])
        idx = sorted(int(i) for i in rng.choice(len(plans), camp.n_circles, replace=False))
    else:
        idx = list(range(len(plans)))
    return [plans[i] for i in idx]


@dataclass
class CircleRun:
    circle: int
    speed: float
    times: np.ndarray          # (S,) snapshot timestamps
    positions: np.ndarray      # (S, 3) truth
    orientations: np.ndarray   # (S, 4)
    velocities: np.ndarray     # (S, 3)
    labels: list               # LabelRecord per snapshot
    imu: object


def plan_run(cfg: ScenarioConfig, plan, seed):
    """Timestamps, truth, interpolated labels and IMU stream of one circle."""
    camp = cfg.campaign
    n_snap = camp.windows_per_circle + camp.temporal - 1
    plan = replace(plan, start_time=plan.index * CIRCLE_TIME_BASE_S)
    rng = np.random.default_rng([seed, plan.index, 7])
    phase = rng.uniform(0, plan.period) if camp.start_phase == "random" else 0.0
    t0 = plan.start_time + phase
    times = t0 + cfg.recording.snapshot_interval_s * np.arange(n_snap)
    pos, vel, _, q = plan.state(times)

    # positioning-system log: own rate, constant clock offset
    gt_t = np.arange(times[0] - 0.1, times[-1] + 0.1 + 0.5 / camp.gt_rate, 1.0 / camp.gt_rate) + camp.gt_offset_s
    gt_pos, gt_vel, _, _ = plan.state(gt_t)
    jam = cfg.jammer.position
    log_rows = [LabelRecord(float(t), jam - p, 0.0, 0.0, 0.0, float(np.linalg.norm(v)))
                for t, p, v in zip(gt_t, gt_pos, gt_vel)]
    labels = interpolate_labels(log_rows, times)

    dt = 1.0 / cfg.imu.rate
    imu_t = np.arange(times[0] - 0.05, times[-1] + 0.05 + dt / 2, dt)
    ip, iv, _, iq = plan.state(imu_t)
    imu = simulate_imu(Trajectory(imu_t, ip, iq, iv), cfg.imu.noise_model(), seed=int(seed) * 100003 + plan.index)
    return CircleRun(plan.index, plan.speed, times, pos, q, vel, labels, imu)


def window_poses(cfg: ScenarioConfig, run: CircleRun, end):
    k = cfg.campaign.temporal
    sl = slice(end - k + 1, end + 1)
    if cfg.imu.pose_source == "truth":
        return relative_poses_from_truth(run.positions[sl], run.orientations[sl], run.times[sl][0])
    v0 = np.zeros(3) if cfg.imu.zero_velocity_start else run.velocities[sl][0]
    return strapdown_relative_poses(run.imu, run.times[sl], v0, initial_orientation=run.orientations[sl][0])


def simulate_circle(cfg: ScenarioConfig, plan, seed=None, jammer=None):
    """SnapshotRecords of one circle run; window-closing records carry poses."""
    seed = cfg.seed if seed is None else seed
    run = plan_run(cfg, plan, seed)
    scene = cfg.scene(jammer)
    k = cfg.campaign.temporal
    records = []
    for i, (t, p, q) in enumerate(zip(run.times, run.positions, run.orientations)):
        snap = synth_snapshot(scene, PoseSE3(p, q, float(t)), cfg.recording, seed, plan.index * 100000 + i)
        label = run.labels[i]
        if scene.jammer is not cfg.jammer:
            label = _relabel(label, p, scene.jammer.position)
        poses = window_poses(cfg, run, i) if i >= k - 1 else None
        records.append(SnapshotRecord(plan.index * 100000 + i, snap, label, poses, plan.index))
    return records


def _relabel(label, position, jammer_position):
    rel = relative_to_jammer(position, jammer_position)
    return LabelRecord(label.timestamp, rel.delta, rel.distance, rel.azimuth, rel.elevation, label.speed)


def simulate_records(cfg: ScenarioConfig, seed=None, jammer=None):
    records = []
    for plan in select_circles(cfg):
        records += simulate_circle(cfg, plan, seed, jammer)
    return records


# --------------------------------------------------------------- features

def spectro_block(snapshot: SnapshotIQ, spec: FeatureSpec = FeatureSpec()):
    """Spectrogram block-averaged to ``spec.spectro_blocks``, in dB re full scale / 100.

    Bin powers are divided by the taper energy first, so unit-power white
    noise reads 0 dB in every bin whatever the STFT length.  The /100 scaling matches the RSS
    entries of the AoA features.
    """
    sg = stft_spectrogram(snapshot, spec.stft_window, spec.stft_hop)
    vals, _ = sg.centered()
    vals = vals - 10 * np.log10(np.sum(get_taper("hann", spec.stft_window) ** 2))
    nf, nt = spec.spectro_blocks
    fb = np.array_split(np.arange(vals.shape[1]), nf)
    tb = np.array_split(np.arange(vals.shape[2]), nt)
    out = np.empty((vals.shape[0], nf, nt))
    for i, fi in enumerate(fb):
        band = vals[:, fi, :].mean(axis=1)
        for j, tj in enumerate(tb):
            out[:, i, j] = band[:, tj].mean(axis=1)
    return out / 100.0


def iq_planes(crop: SnapshotIQ):
    """(C, 2, L) I/Q planes with every channel at unit RMS."""
    x = crop.channels
    rms = np.sqrt(np.mean(np.abs(x) ** 2, axis=1, keepdims=True))
    x = x / np.where(rms > 0, rms, 1.0)
    return np.stack([x.real, x.imag], axis=1)


def window_aperture(crops, poses, geometry, carrier, grid, mode="power"):
    """Aperture (az, el) from all buffered crops and from the last crop alone."""
    buf = ApertureBuffer(list(crops), poses, carrier, geometry)
    full = backprojection_map(buf, grid, mode).argmax
    single = backprojection_map(buf.subset([len(buf) - 1]), grid, mode).argmax
    return full, single


@dataclass
class FeatureSet:
    spectro: np.ndarray      # (N, 4, 32, 30)
    iq: np.ndarray           # (N, 4, 2, L)
    aoa: np.ndarray          # (N, 22)
    poses: np.ndarray        # (N, K, 7)
    delta: np.ndarray        # (N, 3) labels, world frame
    azimuth: np.ndarray
    elevation: np.ndarray
    distance: np.ndarray
    speed: np.ndarray
    circle: np.ndarray
    timestamp: np.ndarray
    aperture: np.ndarray     # (N, 4): az/el with all windows, az/el with the last one; NaN if skipped
    meta: dict = field(default_factory=dict)

    ARRAYS = ("spectro", "iq", "aoa", "poses", "delta", "azimuth", "elevation", "distance", "speed", "circle",
              "timestamp", "aperture")

    def __len__(self):
        return self.aoa.shape[0]

    def inputs(self):
        return {k: getattr(self, k) for k in FEATURE_KEYS}

    def targets(self, scale_m):
        from .fusion import normalize_targets
        return normalize_targets(self.delta, self.azimuth, self.elevation, scale_m)

    def subset(self, mask):
        return FeatureSet(*(getattr(self, k)[mask] for k in self.ARRAYS), meta=dict(self.meta))

    @classmethod
    def concatenate(cls, parts):
        parts = [p for p in parts if len(p)]
        if not parts:
            raise InsufficientDataError("no windows to concatenate")
        return cls(*(np.concatenate([getattr(p, k) for p in parts]) for k in cls.ARRAYS), meta=dict(parts[0].meta))

    def save(self, path):
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        np.savez(path / "features.npz", **{k: getattr(self, k) for k in self.ARRAYS})
        (path / "features.json").write_text(json.dumps(self.meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            data = np.load(path / "features.npz")
        except (OSError, ValueError) as exc:
            raise FormatError(f"{path}: cannot read features ({exc})") from None
        meta = json.loads((path / "features.json").read_text())
        return cls(*(data[k] for k in cls.ARRAYS), meta=meta)


def feature_signature(cfg: ScenarioConfig):
    """Settings that must agree between a training and a test feature set."""
    f = cfg.features
    return {"window": f.window, "crop_offset": f.crop_offset, "stft_window": f.stft_window,
            "stft_hop": f.stft_hop, "spectro_blocks": list(f.spectro_blocks), "temporal": cfg.campaign.temporal,
            "sample_rate": cfg.recording.sample_rate, "n_samples": cfg.recording.n_samples,
            "array_side": cfg.array_side, "center_frequency": cfg.recording.center_frequency,
            "pose_source": cfg.imu.pose_source}


def featurize_records(records, cfg: ScenarioConfig, aperture=True, grid: AngleGrid = None, jammer_id=None):
    """FeatureSet for every window-closing record.

    The ``temporal`` records preceding a window end (same circle) supply
    the aperture buffer.
    """
    grid = AngleGrid.default() if grid is None else grid
    f = cfg.features
    k = cfg.campaign.temporal
    geometry = cfg.geometry
    carrier = cfg.recording.center_frequency
    by_circle = {}
    for r in records:
        by_circle.setdefault(r.circle, []).append(r)
    rows = {name: [] for name in FeatureSet.ARRAYS}
    for circle in sorted(by_circle):
        recs = sorted(by_circle[circle], key=lambda r: r.snapshot.timestamp)
        crops = [crop_window(r.snapshot, f.crop_offset, f.window) for r in recs]
        for i, r in enumerate(recs):
            if r.poses is None:
                continue
            if i < k - 1:
                raise InsufficientDataError(f"record {r.id}: window needs {k} snapshots of circle {circle}")
            crop = crops[i]
            rows["spectro"].append(spectro_block(r.snapshot, f).astype(np.float32))
            rows["iq"].append(iq_planes(crop).astype(np.float32))
            rows["aoa"].append(assemble_aoa_features(crop, geometry, grid, carrier))
            rows["poses"].append(r.poses.as_array())
            lb = r.label
            rows["delta"].append(lb.delta)
            rows["azimuth"].append(lb.azimuth)
            rows["elevation"].append(lb.elevation)
            rows["distance"].append(lb.distance)
            rows["speed"].append(lb.speed)
            rows["circle"].append(circle)
            rows["timestamp"].append(r.snapshot.timestamp)
            if aperture:
                (a5, e5), (a1, e1) = window_aperture(crops[i - k + 1:i + 1], r.poses, geometry, carrier, grid,
                                                     cfg.aperture_mode)
                rows["aperture"].append([a5, e5, a1, e1])
            else:
                rows["aperture"].append([np.nan] * 4)
    if not rows["aoa"]:
        raise InsufficientDataError("no complete windows in the records")
    meta = {"features": feature_signature(cfg), "jammer": jammer_id or cfg.jammer.name,
            "bandwidth": cfg.jammer.bandwidth, "aperture_mode": cfg.aperture_mode}
    arrays = [np.asarray(rows[name]) for name in FeatureSet.ARRAYS]
    return FeatureSet(*arrays, meta=meta)


def build_features(cfg: ScenarioConfig, seed=None, jammer=None, aperture=True, progress=None):
    """Simulate and featurise circle by circle without keeping full snapshots."""
    parts = []
    plans = select_circles(cfg)
    grid = AngleGrid.default()
    jammer_id = (jammer or cfg.jammer).name
    for n, plan in enumerate(plans):
        recs = simulate_circle(cfg, plan, seed, jammer)
        sub = cfg if jammer is None else replace(cfg, jammer=jammer)
        parts.append(featurize_records(recs, sub, aperture, grid, jammer_id))
        if progress is not None:
            progress(n, len(plans))
        log.info("circle %d (%d/%d) featurised", plan.index, n + 1, len(plans))
    return FeatureSet.concatenate(parts)


def dataset_manifest(records, cfg: ScenarioConfig, seed):
    return manifest_for(records, cfg.jammer.name, seed, cfg.to_dict())


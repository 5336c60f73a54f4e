"""Scenario and training configuration files (YAML with nested sections).

Every key is optional; unknown keys raise :class:`ConfigError` naming the
offending ``section.key``.
"""
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError
from .geometry import ArrayGeometry, JammerSpec, TrajectorySpec
from .imu import ImuNoiseModel
from .rfsim import REFERENCE_POWER_DBM, ChannelModel, RecordingConfig, Scene, hall_reflectors

DEFAULT_JAMMER_POSITION = (1.3, 0.7, 0.3)


@dataclass(frozen=True)
class ChannelSpec:
    multipath: bool = True
    hall_half_x: float = 14.0
    hall_half_y: float = 10.0
    wall_gain: float = 0.5
    floor_gain: float = 0.3
    snr_db: Optional[float] = 20.0      # LoS SNR at snr_reference_m; None -> noise_power
    snr_reference_m: float = 10.0
    noise_power: float = 0.0
    path_loss_exponent: float = 1.0
    cfo_hz: float = 0.0


@dataclass(frozen=True)
class ImuSpec:
    rate: float = 200.0
    accel_white_sigma: float = 0.0
    gyro_white_sigma: float = 0.0
    accel_bias: tuple = (0.0, 0.0, 0.0)
    gyro_bias: tuple = (0.0, 0.0, 0.0)
    pose_source: str = "imu"          # "imu" (strapdown) or "truth" (positioning system)
    zero_velocity_start: bool = False

    def noise_model(self):
        return ImuNoiseModel(self.accel_white_sigma, self.gyro_white_sigma, self.accel_bias, self.gyro_bias,
                             self.rate)


@dataclass(frozen=True)
class CampaignSpec:
    circles: Optional[tuple] = None     # explicit circle indices
    n_circles: Optional[int] = None     # else a seeded random subset of this size
    windows_per_circle: int = 25
    temporal: int = 5
    gt_rate: float = 100.0
    gt_offset_s: float = 0.004
    start_phase: str = "random"         # "zero" or "random" start angle on each circle


@dataclass(frozen=True)
class FeatureSpec:
    window: int = 1024
    crop_offset: int = 0
    stft_window: int = 512
    stft_hop: int = 256
    spectro_blocks: tuple = (32, 30)
    keep_crops: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    jammer: JammerSpec = field(default_factory=lambda: JammerSpec(DEFAULT_JAMMER_POSITION))
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    origin: tuple = (0.0, 0.0, 0.0)
    recording: RecordingConfig = field(default_factory=RecordingConfig)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    array_side: float = 0.09
    imu: ImuSpec = field(default_factory=ImuSpec)
    campaign: CampaignSpec = field(default_factory=CampaignSpec)
    features: FeatureSpec = field(default_factory=FeatureSpec)
    aperture_mode: str = "power"

    def __post_init__(self):
        if self.imu.pose_source not in ("imu", "truth"):
            raise ConfigError("imu.pose_source", f"expected 'imu' or 'truth', got {self.imu.pose_source!r}")
        if self.campaign.temporal < 1:
            raise ConfigError("campaign.temporal", "must be >= 1")
        if self.campaign.windows_per_circle < 1:
            raise ConfigError("campaign.windows_per_circle", "must be >= 1")
        if self.campaign.start_phase not in ("zero", "random"):
            raise ConfigError("campaign.start_phase", "expected 'zero' or 'random'")
        if self.features.crop_offset + self.features.window > self.recording.n_samples:
            raise ConfigError("features.window", "crop does not fit inside a snapshot")
        if self.aperture_mode not in ("power", "coherent"):
            raise ConfigError("aperture_mode", f"unknown mode {self.aperture_mode!r}")

    @property
    def geometry(self):
        return ArrayGeometry.square(self.array_side)

    def noise_power(self):
        ch = self.channel
        if ch.snr_db is None:
            return ch.noise_power
        amp = 10 ** ((self.jammer.power_dbm - REFERENCE_POWER_DBM) / 20) * ch.snr_reference_m ** (
            -ch.path_loss_exponent)
        return float(amp ** 2 / 10 ** (ch.snr_db / 10))

    def scene(self, jammer: JammerSpec = None):
        ch = self.channel
        refl = hall_reflectors(ch.hall_half_x, ch.hall_half_y, ch.wall_gain, ch.floor_gain) if ch.multipath else []
        model = ChannelModel(refl, self.noise_power(), ch.path_loss_exponent, ch.cfo_hz)
        return Scene(jammer or self.jammer, model, self.geometry)

    def to_dict(self):
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, tuple):
                return [clean(x) for x in v]
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            return v
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = clean(dataclasses.asdict(v) if dataclasses.is_dataclass(v) else v)
        return out


_SECTIONS = {
    "jammer": JammerSpec,
    "trajectory": TrajectorySpec,
    "recording": RecordingConfig,
    "channel": ChannelSpec,
    "imu": ImuSpec,
    "campaign": CampaignSpec,
    "features": FeatureSpec,
}


def _build(cls, section, values, base=None):
    if values is None:
        values = {}
    if not isinstance(values, dict):
        raise ConfigError(section, "expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    for key in values:
        if key not in names:
            raise ConfigError(f"{section}.{key}", "unknown key")
    kw = {} if base is None else {f.name: getattr(base, f.name) for f in dataclasses.fields(cls)}
    for k, v in values.items():
        kw[k] = tuple(v) if isinstance(v, list) else v
    try:
        return cls(**kw)
    except ConfigError as exc:
        raise ConfigError(f"{section}.{exc.field}", exc.message) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(section, str(exc)) from None


def scenario_from_dict(data) -> ScenarioConfig:
    data = dict(data or {})
    top = {f.name for f in dataclasses.fields(ScenarioConfig)}
    kw = {}
    for key, value in data.items():
        if key not in top:
            raise ConfigError(key, "unknown key")
        if key in _SECTIONS:
            base = JammerSpec(DEFAULT_JAMMER_POSITION) if key == "jammer" else None
            kw[key] = _build(_SECTIONS[key], key, value, base)
        else:
            kw[key] = tuple(value) if isinstance(value, list) else value
    try:
        return ScenarioConfig(**kw)
    except TypeError as exc:
        raise ConfigError("scenario", str(exc)) from None


def load_yaml(path):
    try:
        return yaml.safe_load(Path(path).read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML: {exc}") from None


def load_scenario(path) -> ScenarioConfig:
    return scenario_from_dict(load_yaml(path))


def load_training(path):
    """``(TrainConfig, ModelConfig, split)`` from a training config file.

    Sections: ``training`` (optimiser), ``model`` (architecture) and
    ``split`` (``ratio``, ``seed``).
    """
    from .fusion import ModelConfig, TrainConfig

    data = load_yaml(path) if path is not None else {}
    for key in data:
        if key not in ("training", "model", "split"):
            raise ConfigError(key, "unknown key")
    train = _build(TrainConfig, "training", data.get("training"))
    model = _build(ModelConfig, "model", data.get("model"))
    split = dict(ratio=0.8, seed=0)
    for k, v in (data.get("split") or {}).items():
        if k not in split:
            raise ConfigError(f"split.{k}", "unknown key")
        split[k] = v
    return train, model, split

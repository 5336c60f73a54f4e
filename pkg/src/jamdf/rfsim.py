"""Four-channel complex baseband synthesis of chirp jammers.

The received field is a sum of plane waves: the line-of-sight path plus
one first-order image source per reflecting plane.  Each path contributes
``gain * chirp(t - delay) * steering`` where the delay is split into a
carrier-phase rotation and a nearest-integer baseband sample shift.
"""
from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import quaternion as quat
from .errors import AliasingError, BoundsError, ConfigError, DegenerateGeometryError
from .geometry import GPS_L1, SPEED_OF_LIGHT, ArrayGeometry, JammerSpec, PoseSE3, vec3

REFERENCE_POWER_DBM = 10.0  # emitted power giving unit amplitude at 1 m


@dataclass(frozen=True)
class SnapshotIQ:
    timestamp: float
    channels: np.ndarray
    sample_rate: float

    def __post_init__(self):
        ch = np.asarray(self.channels)
        if ch.ndim != 2:
            raise ValueError("channels must be a (n_channels, n_samples) array")
        if not self.sample_rate > 0:
            raise ConfigError("sample_rate", "must be positive")
        object.__setattr__(self, "channels", ch)

    @property
    def n_samples(self):
        return self.channels.shape[1]

    @property
    def n_channels(self):
        return self.channels.shape[0]


@dataclass(frozen=True)
class Reflector:
    point: np.ndarray
    normal: np.ndarray
    gain: float = 0.5

    def __post_init__(self):
        n = vec3(self.normal)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ConfigError("normal", "reflector normal must be non-zero")
        object.__setattr__(self, "point", vec3(self.point))
        object.__setattr__(self, "normal", n / norm)
        if not 0.0 <= self.gain <= 1.0:
            raise ConfigError("reflection_gain", "must lie in [0, 1]")


@dataclass(frozen=True)
class ChannelModel:
    reflectors: List[Reflector] = field(default_factory=list)
    noise_power: float = 0.0
    path_loss_exponent: float = 1.0
    cfo_hz: float = 0.0

    def __post_init__(self):
        if self.noise_power < 0:
            raise ConfigError("noise_power", "must be >= 0")
        object.__setattr__(self, "reflectors", list(self.reflectors))


@dataclass(frozen=True)
class RecordingConfig:
    sample_rate: float = 40.96e6
    snapshot_len_s: float = 3e-3
    snapshot_interval_s: float = 0.2
    center_frequency: float = GPS_L1

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ConfigError("sample_rate", "must be positive")
        if not 0 < self.snapshot_len_s < self.snapshot_interval_s:
            raise ConfigError("snapshot_len_s", "must be positive and shorter than snapshot_interval_s")

    @property
    def n_samples(self):
        return int(round(self.snapshot_len_s * self.sample_rate))


@dataclass(frozen=True)
class Scene:
    jammer: JammerSpec
    channel: ChannelModel = field(default_factory=ChannelModel)
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry.square)


def hall_reflectors(half_x=14.0, half_y=10.0, wall_gain=0.5, floor_gain=0.3):
    """Floor plus four walls of a rectangular hall centred on the origin."""
    refl = [Reflector((0, 0, 0), (0, 0, 1), floor_gain)] if floor_gain > 0 else []
    if wall_gain > 0:
        refl += [
            Reflector((half_x, 0, 0), (-1, 0, 0), wall_gain),
            Reflector((-half_x, 0, 0), (1, 0, 0), wall_gain),
            Reflector((0, half_y, 0), (0, -1, 0), wall_gain),
            Reflector((0, -half_y, 0), (0, 1, 0), wall_gain),
        ]
    return refl


def sweep_phase(jammer: JammerSpec, tau):
    """Chirp phase (rad) as a function of time into the current sweep."""
    b, period = jammer.bandwidth, jammer.sweep_period
    if jammer.sweep_shape == "sawtooth":
        return 2 * np.pi * (-0.5 * b * tau + 0.5 * b / period * tau * tau)
    half = 0.5 * period
    up = tau < half
    u = np.where(up, tau, tau - half)
    rising = -0.5 * b * u + b / period * u * u
    falling = 0.5 * b * u - b / period * u * u
    # both legs start at zero phase, so the waveform is continuous
    return 2 * np.pi * np.where(up, rising, falling)


def gen_chirp_baseband(jammer: JammerSpec, n: int, fs: float, t0: float = 0.0):
    """Unit-envelope linear-FM chirp sampled at ``t0 + m / fs``.

    The instantaneous frequency sweeps ``-B/2 -> +B/2`` once per
    ``sweep_period``; absolute time ``t0`` fixes the sweep phase so that
    successive snapshots share one continuous emission.
    """
    if n <= 0:
        raise ConfigError("n", "must be positive")
    if jammer.bandwidth >= fs:
        raise AliasingError(f"bandwidth {jammer.bandwidth:g} Hz does not fit sample rate {fs:g} Hz")
    period = jammer.sweep_period
    # reduce t0 first so the per-sample times keep full precision
    tau = np.mod(np.mod(t0, period) + np.arange(n) / fs, period)
    return np.exp(1j * sweep_phase(jammer, tau))


def element_offsets_world(geometry: ArrayGeometry, orientation):
    return quat.rotate(orientation, geometry.element_offsets)


def steering_matrix(offsets_world, directions, carrier):
    """(G, M) coefficients ``exp(j 2 pi / lambda <u, offset>)`` for G directions."""
    lam = SPEED_OF_LIGHT / carrier
    proj = np.asarray(directions, dtype=float) @ np.asarray(offsets_world, dtype=float).T
    return np.exp(2j * np.pi / lam * proj)


def array_steering_vector(geometry: ArrayGeometry, pose: PoseSE3, source_dir, carrier):
    u = np.asarray(source_dir, dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise DegenerateGeometryError("source direction is the zero vector")
    return steering_matrix(element_offsets_world(geometry, pose.orientation), u / norm, carrier)


def propagation_paths(scene: Scene, position):
    """(source position, amplitude factor) for LoS and every valid image source.

    An image is skipped when the receiver or the jammer lies behind its
    plane, since no specular reflection reaches the receiver.
    """
    jammer = scene.jammer.position
    paths = [(jammer, 1.0)]
    for refl in scene.channel.reflectors:
        side_j = float(np.dot(jammer - refl.point, refl.normal))
        side_r = float(np.dot(position - refl.point, refl.normal))
        if side_j <= 0 or side_r <= 0 or refl.gain == 0:
            continue
        paths.append((jammer - 2 * side_j * refl.normal, refl.gain))
    return paths


def render_signal(scene: Scene, pose: PoseSE3, cfg: RecordingConfig, n_samples=None):
    """Noise-free received baseband, shape (4, n_samples)."""
    n = cfg.n_samples if n_samples is None else int(n_samples)
    fs = cfg.sample_rate
    jam = scene.jammer
    offset_hz = jam.center_frequency - cfg.center_frequency + scene.channel.cfo_hz
    if jam.bandwidth >= fs or jam.bandwidth / 2 + abs(offset_hz) >= fs / 2:
        raise AliasingError(f"jammer band (B={jam.bandwidth:g} Hz, offset {offset_hz:g} Hz) "
                            f"aliases at fs={fs:g} Hz")
    position = pose.position
    offsets = element_offsets_world(scene.geometry, pose.orientation)
    lam = SPEED_OF_LIGHT / jam.center_frequency
    amp0 = 10 ** ((jam.power_dbm - REFERENCE_POWER_DBM) / 20)

    paths = []
    for src, gain in propagation_paths(scene, position):
        vec = src - position
        d = float(np.linalg.norm(vec))
        if d == 0.0:
            raise DegenerateGeometryError("array centre coincides with a source or image")
        delay_samples = int(round(d / SPEED_OF_LIGHT * fs))
        phase = np.exp(-2j * np.pi * np.mod(d / lam, 1.0))
        coef = gain * amp0 * d ** (-scene.channel.path_loss_exponent) * phase
        steer = steering_matrix(offsets, vec / d, jam.center_frequency)
        paths.append((delay_samples, coef * steer))

    max_delay = max(p[0] for p in paths)
    # one chirp evaluation covers all integer delays: sample m of a path
    # delayed by D reads emission time t0 + (m - D) / fs
    ext = gen_chirp_baseband(jam, n + max_delay, fs, pose.timestamp - max_delay / fs)
    out = np.zeros((4, n), dtype=complex)
    for delay, steer in paths:
        start = max_delay - delay
        out += steer[:, None] * ext[None, start:start + n]
    if offset_hz != 0.0:
        t = np.mod(pose.timestamp, 1.0 / abs(offset_hz)) + np.arange(n) / fs
        out *= np.exp(2j * np.pi * offset_hz * t)[None, :]
    return out


def snapshot_rng(seed, index=0):
    """Independent generator per (seed, snapshot index) pair."""
    return np.random.default_rng([int(seed), int(index)])


def complex_noise(rng, shape, power):
    return np.sqrt(power / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synth_snapshot(scene: Scene, pose: PoseSE3, cfg: RecordingConfig, seed: int = 0,
                   index: int = 0, n_samples=None) -> SnapshotIQ:
    x = render_signal(scene, pose, cfg, n_samples)
    if scene.channel.noise_power > 0:
        x = x + complex_noise(snapshot_rng(seed, index), x.shape, scene.channel.noise_power)
    return SnapshotIQ(pose.timestamp, x, cfg.sample_rate)


def noise_power_for_snr(signal, snr_db):
    """Noise variance giving ``snr_db`` against the mean per-channel signal power."""
    return float(np.mean(np.abs(signal) ** 2)) / 10 ** (snr_db / 10)


def crop_window(s: SnapshotIQ, offset: int, length: int) -> SnapshotIQ:
    if offset < 0 or length <= 0 or offset + length > s.n_samples:
        raise BoundsError(f"window [{offset}, {offset + length}) outside snapshot of {s.n_samples} samples")
    return SnapshotIQ(s.timestamp + offset / s.sample_rate,
                      s.channels[:, offset:offset + length], s.sample_rate)

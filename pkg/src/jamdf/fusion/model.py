"""Four-path fusion regressor.

Paths (output widths in brackets):

* spectrogram block, flattened -> dense 256 -> dense [128]
* raw IQ (I/Q planes of the four channels as 8 input channels) -> three
  strided 1-D convolutions -> global mean pool -> dense [128]
* AoA features -> kernel-1 convolution -> dense [32]
* relative poses (K x 7), flattened -> dense [32]

Path outputs pass dropout (the AoA path is exempt by default), are
concatenated and feed a shared 512-unit ReLU trunk (followed by dropout)
with a linear displacement head and a tanh angle head.
"""
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ShapeError
from . import layers as L

OUT_XYZ = slice(0, 3)
OUT_ANG = slice(3, 5)
AZ_COL = 3
PATHS = ("spectro", "iq", "aoa", "pose")


@dataclass(frozen=True)
class ModelConfig:
    spectro_shape: tuple = (4, 32, 30)
    iq_shape: tuple = (4, 2, 1024)
    aoa_dim: int = 22
    pose_shape: tuple = (5, 7)
    spectro_hidden: int = 256
    spectro_out: int = 128
    conv_channels: tuple = (8, 16, 32)
    conv_kernel: int = 7
    conv_stride: int = 4
    iq_out: int = 128
    aoa_channels: int = 8
    aoa_out: int = 32
    pose_out: int = 32
    use_pose: bool = True
    trunk: int = 512
    dropout: float = 0.5
    # paths whose output skips the pre-concatenation dropout; () drops every path
    undropped_paths: tuple = ("aoa",)

    def __post_init__(self):
        for name in ("spectro_shape", "iq_shape", "pose_shape", "conv_channels"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        object.__setattr__(self, "undropped_paths", tuple(str(v) for v in self.undropped_paths))
        unknown = set(self.undropped_paths) - set(PATHS)
        if unknown:
            raise ValueError(f"unknown fusion paths {sorted(unknown)}; expected a subset of {PATHS}")

    @property
    def trunk_input(self):
        return self.spectro_out + self.iq_out + self.aoa_out + (self.pose_out if self.use_pose else 0)

    @classmethod
    def three_path(cls, **kw):
        """Three concatenated paths giving a 288-wide trunk input."""
        return cls(use_pose=False, **kw)

    def to_dict(self):
        return asdict(self)


def _he(rng, fan_in, shape):
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


def _glorot(rng, fan_in, shape):
    return rng.standard_normal(shape) * np.sqrt(1.0 / fan_in)


@dataclass
class FusionRegressor:
    config: ModelConfig
    params: dict = field(default_factory=dict)
    scale_m: float = 30.0

    @classmethod
    def initialize(cls, config: ModelConfig = ModelConfig(), seed=0, scale_m=30.0):
        rng = np.random.default_rng(seed)
        c = config
        p = {}
        n_spec = int(np.prod(c.spectro_shape))
        p["spec.w1"] = _he(rng, n_spec, (n_spec, c.spectro_hidden))
        p["spec.b1"] = np.zeros(c.spectro_hidden)
        p["spec.w2"] = _he(rng, c.spectro_hidden, (c.spectro_hidden, c.spectro_out))
        p["spec.b2"] = np.zeros(c.spectro_out)
        cin = c.iq_shape[0] * c.iq_shape[1]
        for i, cout in enumerate(c.conv_channels):
            p[f"iq.conv{i}.w"] = _he(rng, cin * c.conv_kernel, (cout, cin, c.conv_kernel))
            p[f"iq.conv{i}.b"] = np.zeros(cout)
            cin = cout
        p["iq.w"] = _he(rng, cin, (cin, c.iq_out))
        p["iq.b"] = np.zeros(c.iq_out)
        p["aoa.conv.w"] = _he(rng, 1, (c.aoa_channels, 1, 1))
        p["aoa.conv.b"] = np.zeros(c.aoa_channels)
        n_aoa = c.aoa_channels * c.aoa_dim
        p["aoa.w"] = _he(rng, n_aoa, (n_aoa, c.aoa_out))
        p["aoa.b"] = np.zeros(c.aoa_out)
        if c.use_pose:
            n_pose = int(np.prod(c.pose_shape))
            p["pose.w"] = _he(rng, n_pose, (n_pose, c.pose_out))
            p["pose.b"] = np.zeros(c.pose_out)
        p["trunk.w"] = _he(rng, c.trunk_input, (c.trunk_input, c.trunk))
        p["trunk.b"] = np.zeros(c.trunk)
        p["head_xyz.w"] = _glorot(rng, c.trunk, (c.trunk, 3))
        p["head_xyz.b"] = np.zeros(3)
        p["head_ang.w"] = _glorot(rng, c.trunk, (c.trunk, 2))
        p["head_ang.b"] = np.zeros(2)
        return cls(config, p, scale_m)

    def zeros_like(self):
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def n_parameters(self):
        return int(sum(v.size for v in self.params.values()))

    def _check(self, batch):
        c = self.config
        expected = {"spectro": c.spectro_shape, "iq": c.iq_shape, "aoa": (c.aoa_dim,)}
        if c.use_pose:
            expected["poses"] = c.pose_shape
        bsz = None
        for name, shape in expected.items():
            if name not in batch:
                raise ShapeError(f"{name} path: input missing")
            arr = batch[name]
            if tuple(arr.shape[1:]) != shape:
                raise ShapeError(f"{name} path: expected (B, {', '.join(map(str, shape))}), "
                                 f"got {tuple(arr.shape)}")
            if bsz is None:
                bsz = arr.shape[0]
            elif arr.shape[0] != bsz:
                raise ShapeError(f"{name} path: batch size {arr.shape[0]} != {bsz}")

    def forward(self, batch, training=False, rng=None):
        """Raw outputs (B, 5): three displacement values then two tanh angles.

        Dropout is active only with ``training=True`` and an ``rng``.
        """
        self._check(batch)
        p, c = self.params, self.config
        drop_rng = rng if training else None
        cache = {}

        x = np.asarray(batch["spectro"], dtype=float).reshape(len(batch["spectro"]), -1)
        h, cache["spec.d1"] = L.dense_forward(x, p["spec.w1"], p["spec.b1"])
        h, cache["spec.r1"] = L.relu_forward(h)
        h, cache["spec.d2"] = L.dense_forward(h, p["spec.w2"], p["spec.b2"])
        spec, cache["spec.r2"] = L.relu_forward(h)

        iq = np.asarray(batch["iq"], dtype=float)
        h = iq.reshape(iq.shape[0], iq.shape[1] * iq.shape[2], iq.shape[3])
        for i in range(len(c.conv_channels)):
            h, cache[f"iq.conv{i}"] = L.conv1d_forward(h, p[f"iq.conv{i}.w"], p[f"iq.conv{i}.b"],
                                                       c.conv_stride)
            h, cache[f"iq.relu{i}"] = L.relu_forward(h)
        h, cache["iq.pool"] = L.mean_pool_forward(h)
        h, cache["iq.d"] = L.dense_forward(h, p["iq.w"], p["iq.b"])
        iqf, cache["iq.r"] = L.relu_forward(h)

        a = np.asarray(batch["aoa"], dtype=float)[:, None, :]
        h, cache["aoa.conv"] = L.conv1d_forward(a, p["aoa.conv.w"], p["aoa.conv.b"], 1)
        h, cache["aoa.relu0"] = L.relu_forward(h)
        h = h.reshape(h.shape[0], -1)
        h, cache["aoa.d"] = L.dense_forward(h, p["aoa.w"], p["aoa.b"])
        aoaf, cache["aoa.r"] = L.relu_forward(h)

        paths = [spec, iqf, aoaf]
        if c.use_pose:
            x = np.asarray(batch["poses"], dtype=float).reshape(len(batch["poses"]), -1)
            h, cache["pose.d"] = L.dense_forward(x, p["pose.w"], p["pose.b"])
            posef, cache["pose.r"] = L.relu_forward(h)
            paths.append(posef)

        dropped = []
        for i, f in enumerate(paths):
            rate = 0.0 if PATHS[i] in c.undropped_paths else c.dropout
            f, cache[f"drop.path{i}"] = L.dropout_forward(f, rate, drop_rng)
            dropped.append(f)
        z = np.concatenate(dropped, axis=1)
        cache["widths"] = [f.shape[1] for f in dropped]

        h, cache["trunk.d"] = L.dense_forward(z, p["trunk.w"], p["trunk.b"])
        h, cache["trunk.r"] = L.relu_forward(h)
        h, cache["trunk.drop"] = L.dropout_forward(h, c.dropout, drop_rng)
        xyz, cache["head_xyz"] = L.dense_forward(h, p["head_xyz.w"], p["head_xyz.b"])
        ang, cache["head_ang.d"] = L.dense_forward(h, p["head_ang.w"], p["head_ang.b"])
        ang, cache["head_ang.t"] = L.tanh_forward(ang)
        cache["trunk_input"] = z.shape[1]
        return np.concatenate([xyz, ang], axis=1), cache

    def backward(self, dout, cache):
        """Parameter gradients for upstream gradient ``dout`` (B, 5)."""
        p, c = self.params, self.config
        g = {}
        dh_xyz, g["head_xyz.w"], g["head_xyz.b"] = L.dense_backward(dout[:, OUT_XYZ], cache["head_xyz"],
                                                                   p["head_xyz.w"])
        da = L.tanh_backward(dout[:, OUT_ANG], cache["head_ang.t"])
        dh_ang, g["head_ang.w"], g["head_ang.b"] = L.dense_backward(da, cache["head_ang.d"], p["head_ang.w"])
        dh = L.dropout_backward(dh_xyz + dh_ang, cache["trunk.drop"])
        dh = L.relu_backward(dh, cache["trunk.r"])
        dz, g["trunk.w"], g["trunk.b"] = L.dense_backward(dh, cache["trunk.d"], p["trunk.w"])

        splits = np.cumsum(cache["widths"])[:-1]
        dpaths = [L.dropout_backward(d, cache[f"drop.path{i}"])
                  for i, d in enumerate(np.split(dz, splits, axis=1))]

        d = L.relu_backward(dpaths[0], cache["spec.r2"])
        d, g["spec.w2"], g["spec.b2"] = L.dense_backward(d, cache["spec.d2"], p["spec.w2"])
        d = L.relu_backward(d, cache["spec.r1"])
        _, g["spec.w1"], g["spec.b1"] = L.dense_backward(d, cache["spec.d1"], p["spec.w1"])

        d = L.relu_backward(dpaths[1], cache["iq.r"])
        d, g["iq.w"], g["iq.b"] = L.dense_backward(d, cache["iq.d"], p["iq.w"])
        d = L.mean_pool_backward(d, cache["iq.pool"])
        for i in reversed(range(len(c.conv_channels))):
            d = L.relu_backward(d, cache[f"iq.relu{i}"])
            d, g[f"iq.conv{i}.w"], g[f"iq.conv{i}.b"] = L.conv1d_backward(d, cache[f"iq.conv{i}"],
                                                                          p[f"iq.conv{i}.w"])

        d = L.relu_backward(dpaths[2], cache["aoa.r"])
        d, g["aoa.w"], g["aoa.b"] = L.dense_backward(d, cache["aoa.d"], p["aoa.w"])
        d = d.reshape(d.shape[0], c.aoa_channels, c.aoa_dim)
        d = L.relu_backward(d, cache["aoa.relu0"])
        _, g["aoa.conv.w"], g["aoa.conv.b"] = L.conv1d_backward(d, cache["aoa.conv"], p["aoa.conv.w"])

        if c.use_pose:
            d = L.relu_backward(dpaths[3], cache["pose.r"])
            _, g["pose.w"], g["pose.b"] = L.dense_backward(d, cache["pose.d"], p["pose.w"])
        return g

    def loss_and_gradients(self, batch, target, training=False, rng=None):
        out, cache = self.forward(batch, training, rng)
        loss, dout = L.mae_loss(out, target, wrap_cols=(AZ_COL,))
        return loss, self.backward(dout, cache)


@dataclass
class Prediction:
    delta: np.ndarray       # (N, 3) m
    azimuth: np.ndarray     # (N,) deg
    elevation: np.ndarray   # (N,) deg

    @property
    def distance(self):
        return np.linalg.norm(self.delta, axis=1)

    def __len__(self):
        return self.delta.shape[0]


def normalize_targets(delta, azimuth, elevation, scale_m):
    return np.column_stack([np.asarray(delta) / scale_m, np.asarray(azimuth) / 180.0,
                            np.asarray(elevation) / 90.0])


def denormalize(raw, scale_m) -> Prediction:
    from ..geometry import wrap_angle_deg
    raw = np.atleast_2d(raw)
    return Prediction(raw[:, OUT_XYZ] * scale_m, np.atleast_1d(wrap_angle_deg(180.0 * raw[:, 3])),
                      90.0 * raw[:, 4])


def predict_batch(model: FusionRegressor, batch, chunk=256) -> Prediction:
    n = len(batch["aoa"])
    outs = []
    for s in range(0, n, chunk):
        sub = {k: v[s:s + chunk] for k, v in batch.items()}
        outs.append(model.forward(sub, training=False)[0])
    return denormalize(np.concatenate(outs, axis=0), model.scale_m)

"""Mini-batch SGD training loop for :class:`FusionRegressor`."""
import csv
import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError, ShapeError
from .model import AZ_COL, FusionRegressor, ModelConfig
from . import layers as L

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    lr: float = 1e-2
    momentum: float = 0.9
    weight_decay: float = 1e-4
    milestones: tuple = (30, 40)
    gamma: float = 0.1
    seed: int = 0
    scale_m: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "milestones", tuple(int(m) for m in self.milestones))
        if self.epochs < 1:
            raise ConfigError("epochs", "must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be >= 1")
        if not self.lr > 0:
            raise ConfigError("lr", "must be positive")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum", "must be in [0, 1)")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay", "must be >= 0")

    def lr_at(self, epoch):
        """Step schedule: ``lr * gamma ** (milestones passed)`` for a 0-based epoch."""
        return self.lr * self.gamma ** sum(epoch >= m for m in self.milestones)

    def to_dict(self):
        return asdict(self)


def sgd_step(params, grads, velocity, lr, momentum, weight_decay):
    """Heavy-ball momentum with decoupled weight decay, in place."""
    for k, p in params.items():
        v = velocity[k]
        v *= momentum
        v += grads[k]
        p -= lr * (v + weight_decay * p)


@dataclass
class TrainResult:
    model: FusionRegressor
    losses: np.ndarray      # (epochs,) sample-weighted mean training loss
    lrs: np.ndarray

    def write_loss_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "lr", "loss"])
            for i, (lr, loss) in enumerate(zip(self.lrs, self.losses)):
                w.writerow([i + 1, repr(float(lr)), repr(float(loss))])


def _n_samples(inputs):
    sizes = {k: len(v) for k, v in inputs.items()}
    if len(set(sizes.values())) != 1:
        raise ShapeError(f"inconsistent sample counts {sizes}")
    return next(iter(sizes.values()))


def train(inputs, targets, config: TrainConfig = TrainConfig(), model_config: ModelConfig = None,
          model: FusionRegressor = None, progress=None) -> TrainResult:
    """Fit on normalised ``targets`` (N, 5): xyz / scale_m, az / 180, el / 90.

    Initialisation and every random draw during training derive from
    ``config.seed``, so equal inputs give bitwise equal weights.
    """
    n = _n_samples(inputs)
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (n, 5):
        raise ShapeError(f"targets must be ({n}, 5), got {targets.shape}")
    if model is None:
        model = FusionRegressor.initialize(model_config or ModelConfig(), seed=config.seed,
                                           scale_m=config.scale_m)
    rng = np.random.default_rng([config.seed, 1])
    velocity = model.zeros_like()
    losses, lrs = [], []
    for epoch in range(config.epochs):
        lr = config.lr_at(epoch)
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, config.batch_size):
            idx = order[s:s + config.batch_size]
            batch = {k: v[idx] for k, v in inputs.items()}
            out, cache = model.forward(batch, training=True, rng=rng)
            loss, dout = L.mae_loss(out, targets[idx], wrap_cols=(AZ_COL,))
            grads = model.backward(dout, cache)
            sgd_step(model.params, grads, velocity, lr, config.momentum, config.weight_decay)
            total += loss * len(idx)
        losses.append(total / n)
        lrs.append(lr)
        log.info("epoch %d lr %.1e loss %.5f", epoch + 1, lr, losses[-1])
        if progress is not None:
            progress(epoch, losses[-1])
    return TrainResult(model, np.array(losses), np.array(lrs))

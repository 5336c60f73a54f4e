"""Differentiable building blocks; every ``*_forward`` returns (out, cache)."""
import numpy as np


def dense_forward(x, w, b):
    return x @ w + b, x


def dense_backward(dy, cache, w):
    x = cache
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def relu_forward(x):
    return np.maximum(x, 0.0), x > 0


def relu_backward(dy, mask):
    return dy * mask


def tanh_forward(x):
    y = np.tanh(x)
    return y, y


def tanh_backward(dy, y):
    return dy * (1.0 - y * y)


def dropout_forward(x, p, rng):
    """Inverted dropout; ``rng=None`` or ``p == 0`` is the identity."""
    if rng is None or p <= 0.0:
        return x, None
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * mask, mask


def dropout_backward(dy, mask):
    return dy if mask is None else dy * mask


def _conv_out_len(length, kernel, stride):
    return (length - kernel) // stride + 1


def conv1d_forward(x, w, b, stride=1):
    """Valid 1-D convolution. x: (B, C, L), w: (O, C, K) -> (B, O, L_out)."""
    bsz, c, length = x.shape
    o, _, k = w.shape
    lout = _conv_out_len(length, k, stride)
    span = stride * (lout - 1) + 1
    cols = np.stack([x[:, :, j:j + span:stride] for j in range(k)], axis=2)   # (B, C, K, Lout)
    flat = cols.transpose(0, 3, 1, 2).reshape(bsz * lout, c * k)
    out = (flat @ w.reshape(o, c * k).T + b).reshape(bsz, lout, o).transpose(0, 2, 1)
    return out, (flat, x.shape, stride, k)


def conv1d_backward(dy, cache, w):
    flat, xshape, stride, k = cache
    bsz, c, length = xshape
    o = w.shape[0]
    lout = dy.shape[2]
    dyf = dy.transpose(0, 2, 1).reshape(bsz * lout, o)
    dw = (dyf.T @ flat).reshape(w.shape)
    db = dyf.sum(axis=0)
    dcols = (dyf @ w.reshape(o, c * k)).reshape(bsz, lout, c, k)
    dx = np.zeros(xshape)
    span = stride * (lout - 1) + 1
    for j in range(k):
        dx[:, :, j:j + span:stride] += dcols[:, :, :, j].transpose(0, 2, 1)
    return dx, dw, db


def mean_pool_forward(x):
    return x.mean(axis=2), x.shape


def mean_pool_backward(dy, shape):
    return np.broadcast_to(dy[:, :, None] / shape[2], shape).copy()


def wrap_unit(r):
    """Wrap normalised angle residuals into (-1, 1]."""
    return r - 2.0 * np.ceil((r - 1.0) / 2.0)


def mae_loss(pred, target, wrap_cols=()):
    """Sum over outputs of the batch-mean absolute residual.

    Columns in ``wrap_cols`` hold angles normalised to (-1, 1] and use the
    wrapped residual.  Subgradient of |r| at r = 0 is 0.
    """
    r = pred - target
    for j in wrap_cols:
        r[:, j] = wrap_unit(r[:, j])
    n = pred.shape[0]
    return float(np.abs(r).sum() / n), np.sign(r) / n

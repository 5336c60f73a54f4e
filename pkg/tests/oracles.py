"""Independent reference implementations used as test oracles."""
import numpy as np


def naive_dft(x):
    """O(n^2) DFT evaluated with exact integer phase reduction, row block by row block."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    m = np.arange(n)
    out = np.empty(n, dtype=complex)
    step = max(1, 2**20 // max(n, 1))
    for k0 in range(0, n, step):
        k = np.arange(k0, min(n, k0 + step))[:, None]
        out[k0:k0 + k.shape[0]] = np.exp(-2j * np.pi * ((k * m) % n) / n) @ x
    return out


def finite_difference_check(f, params, grads, rng, probes_per_tensor=6, h=1e-5):
    """Worst relative error between central differences of ``f()`` and ``grads`` at random entries.

    h = 1e-5 balances truncation against float64 cancellation; at 1e-6
    and below the difference quotient itself is off by ~1e-5 on O(10) losses.
    """
    worst, count = 0.0, 0
    for name, v in params.items():
        for _ in range(probes_per_tensor):
            idx = tuple(int(rng.integers(0, s)) for s in v.shape)
            old = v[idx]
            v[idx] = old + h
            fp = f()
            v[idx] = old - h
            fm = f()
            v[idx] = old
            num = (fp - fm) / (2 * h)
            ana = grads[name][idx]
            worst = max(worst, abs(num - ana) / max(1e-8, abs(num) + abs(ana)))
            count += 1
    return worst, count

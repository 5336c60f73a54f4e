"""DFT, STFT spectrograms, Welch PSD and carrier-frequency-offset estimation.

Spectra keep the two-sided FFT bin order (DC, positive frequencies, then
negative frequencies) since the inputs are complex baseband.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InsufficientDataError, NumericalError

DB_FLOOR = -300.0
FOUR_STEP_MIN = 64


def _bit_reverse(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _fft_pow2(x, sign):
    n = x.shape[-1]
    lead = x.shape[:-1]
    y = x[..., _bit_reverse(n)]
    m = 1
    while m < n:
        y = y.reshape(lead + (n // (2 * m), 2, m))
        tw = np.exp(sign * 1j * np.pi * np.arange(m) / m)
        even = y[..., 0, :]
        odd = y[..., 1, :] * tw
        y = np.stack([even + odd, even - odd], axis=-2)
        m *= 2
    return y.reshape(lead + (n,))


def _dft_direct(x, sign):
    n = x.shape[-1]
    return x @ _dft_matrix(n, sign).T


@lru_cache(maxsize=32)
def _dft_matrix(n, sign):
    k = np.arange(n)
    # reduce k*m modulo n before scaling so large n keeps exact twiddles
    w = np.exp(sign * 2j * np.pi * (np.outer(k, k) % n) / n)
    w.setflags(write=False)
    return w


@lru_cache(maxsize=32)
def _four_step_twiddle(n1, n2, sign):
    tw = np.exp(sign * 2j * np.pi * (np.outer(np.arange(n1), np.arange(n2)) % (n1 * n2)) / (n1 * n2))
    tw.setflags(write=False)
    return tw


def _fft_four_step(x, sign):
    """Cooley-Tukey with n = n1 * n2: length-n1 DFTs, twiddle, length-n2 DFTs.

    Input index m = n2*m1 + m2, output index k = k1 + n1*k2.  The short
    DFTs are small matrix products, which keeps the work inside BLAS.
    """
    n = x.shape[-1]
    p = n.bit_length() - 1
    n1 = 1 << (p // 2)
    n2 = n // n1
    lead = x.shape[:-1]
    a = x.reshape(lead + (n1, n2))
    b = np.matmul(_dft_matrix(n1, sign), a) * _four_step_twiddle(n1, n2, sign)
    c = b @ _dft_matrix(n2, sign)
    return np.swapaxes(c, -1, -2).reshape(lead + (n,))


def _fft(x, sign):
    n = x.shape[-1]
    if n & (n - 1):
        return _dft_direct(x, sign)
    if n >= FOUR_STEP_MIN:
        return _fft_four_step(x, sign)
    return _fft_pow2(x, sign)


def dft(x):
    """DFT along the last axis: ``X[k] = sum_m x[m] exp(-2j pi k m / n)``.

    Power-of-two lengths below 64 use iterative radix-2 butterflies, longer
    ones a four-step split; other lengths are evaluated directly.
    """
    return _fft(np.asarray(x, dtype=complex), -1.0)


def idft(X):
    X = np.asarray(X, dtype=complex)
    return _fft(X, 1.0) / X.shape[-1]


def bin_frequencies(n, fs):
    """Bin centre frequencies in FFT order."""
    k = np.arange(n)
    return np.where(k < (n + 1) // 2, k, k - n) * (fs / n)


def hann(n):
    """Periodic Hann taper."""
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


def get_taper(window, n):
    if isinstance(window, str):
        if window == "hann":
            return hann(n)
        if window in ("rect", "boxcar"):
            return np.ones(n)
        raise ValueError(f"unknown taper {window!r}")
    w = np.asarray(window, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"taper length {w.shape} does not match {n}")
    return w


def to_db(power):
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(power)
    return np.maximum(db, DB_FLOOR)


@dataclass
class Spectrogram:
    values: np.ndarray          # (channels, freq_bins, frames)
    freqs: np.ndarray           # Hz, FFT order
    times: np.ndarray           # s, frame centres relative to the snapshot start
    scale: str = "db"

    @property
    def shape(self):
        return self.values.shape

    def centered(self):
        """Values and frequencies re-ordered from -fs/2 to +fs/2 for display."""
        return np.fft.fftshift(self.values, axes=-2), np.fft.fftshift(self.freqs)

    def to_csv(self, path):
        """Re-centred values: one row per (channel, frequency), one column per frame time."""
        vals, freqs = self.centered()
        with open(path, "w") as fh:
            fh.write(",".join(["channel", "freq_hz"] + [f"{t:.9g}" for t in self.times]) + "\n")
            for c in range(vals.shape[0]):
                for f, row in zip(freqs, vals[c]):
                    fh.write(f"{c},{f:.9g}," + ",".join(f"{v:.6f}" for v in row) + "\n")


def frame_count(length, window_len, hop):
    return (length - window_len) // hop + 1


def _frames(x, window_len, hop):
    n_frames = frame_count(x.shape[-1], window_len, hop)
    idx = hop * np.arange(n_frames)[:, None] + np.arange(window_len)[None, :]
    return x[..., idx]


def stft_spectrogram(s, window_len=512, hop=256, window="hann", scale="db", fs=None):
    """Magnitude-squared STFT of every channel of a snapshot.

    ``s`` is a :class:`~jamdf.rfsim.SnapshotIQ` or a (channels, samples)
    array (then ``fs`` defaults to 1).
    """
    if hasattr(s, "channels"):
        x, fs = s.channels, s.sample_rate
    else:
        x = np.atleast_2d(np.asarray(s))
        fs = 1.0 if fs is None else fs
    if x.shape[-1] < window_len:
        raise InsufficientDataError(f"input of {x.shape[-1]} samples is shorter than the "
                                    f"{window_len}-sample window")
    frames = _frames(x, window_len, hop) * get_taper(window, window_len)
    power = np.abs(dft(frames)) ** 2                   # (C, T, F)
    power = np.swapaxes(power, -1, -2)                 # (C, F, T)
    values = to_db(power) if scale == "db" else power
    n_frames = power.shape[-1]
    times = (hop * np.arange(n_frames) + window_len / 2) / fs
    return Spectrogram(values, bin_frequencies(window_len, fs), times, scale)


@dataclass
class WelchPsd:
    freqs: np.ndarray
    psd: np.ndarray
    segment_len: int
    overlap: int
    n_segments: int

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("freq_hz,psd\n")
            order = np.argsort(self.freqs, kind="stable")
            for f, p in zip(self.freqs[order], self.psd[order]):
                fh.write(f"{f:.9g},{p:.9g}\n")


def welch_psd(x, fs=1.0, segment_len=1024, overlap=512, window="hann"):
    """Averaged windowed periodograms; ``sum(psd) * fs / segment_len`` ~ variance."""
    x = np.asarray(x)
    if x.shape[-1] < segment_len:
        raise InsufficientDataError(f"need at least {segment_len} samples, got {x.shape[-1]}")
    if not 0 <= overlap < segment_len:
        raise ValueError("overlap must lie in [0, segment_len)")
    w = get_taper(window, segment_len)
    segs = _frames(x, segment_len, segment_len - overlap) * w
    pgram = np.abs(dft(segs)) ** 2 / (fs * np.sum(w * w))
    return WelchPsd(bin_frequencies(segment_len, fs), pgram.mean(axis=-2),
                    segment_len, overlap, segs.shape[-2])


@dataclass
class CfoEstimate:
    offset: float
    confidence: float


def estimate_cfo(x, fs):
    """Lag-one phase-increment estimator of a residual carrier offset."""
    x = np.asarray(x, dtype=complex).ravel()
    if x.size < 2:
        raise InsufficientDataError("CFO estimation needs at least two samples")
    prod = x[1:] * np.conj(x[:-1])
    acc = prod.sum()
    mag = np.abs(prod).sum()
    if mag == 0.0:
        raise NumericalError("CFO undefined for an all-zero sequence")
    return CfoEstimate(float(fs / (2 * np.pi) * np.angle(acc)), float(min(1.0, abs(acc) / mag)))

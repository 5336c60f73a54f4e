"""
A chirp jammer seen by a four-element array
===========================================

Synthesises one 3 ms snapshot from a 20 MHz sawtooth chirp jammer, looks
at it per sample and as a spectrogram, then estimates a small carrier
offset.  Run with ``python demos/01_chirp_and_spectrogram.py``.
"""
import numpy as np

from jamdf import geometry as g, rfsim, spectral as sp

# The receiver hovers 4 m above the floor; the jammer sits near the floor.
pose = g.PoseSE3([0.0, 0.0, 4.0])
jammer = g.JammerSpec([1.3, 0.7, 0.3], bandwidth=20e6, sweep_period=20e-6)
cfg = rfsim.RecordingConfig()
scene = rfsim.Scene(jammer, rfsim.ChannelModel(noise_power=1e-6))
snap = rfsim.synth_snapshot(scene, pose, cfg, seed=1)
print("snapshot:", snap.channels.shape, "samples at", cfg.sample_rate / 1e6, "MHz")

# Relative phases between the antennas carry the direction; the
# magnitudes are almost identical because the array is only 9 cm wide.
x = snap.channels[:, :8]
print("channel 0 phase minus others [rad]:",
      np.round(np.angle(x[0] * np.conj(x[1:])).mean(axis=1), 3))

# Instantaneous frequency of the baseband chirp ramps from -B/2 to +B/2
# every sweep period.
inst_f = np.diff(np.unwrap(np.angle(snap.channels[0]))) * cfg.sample_rate / (2 * np.pi)
per_sweep = int(jammer.sweep_period * cfg.sample_rate)
print("first sweep starts at %.2f MHz, ends at %.2f MHz"
      % (inst_f[2] / 1e6, inst_f[per_sweep - 3] / 1e6))

# The STFT (authored radix-2 / four-step FFT) gives the 4 x 512 x 479 block
# that feeds the spectrogram path of the fusion model.
sg = sp.stft_spectrogram(snap)
vals, freqs = sg.centered()
print("spectrogram:", sg.shape)
occupied = freqs[vals[0].mean(axis=1) > vals[0].mean(axis=1).max() - 10]
print("band within 10 dB of peak: %.1f .. %.1f MHz" % (occupied.min() / 1e6, occupied.max() / 1e6))

# Welch averaging flattens the periodogram of the chirp.
psd = sp.welch_psd(snap.channels[0], fs=cfg.sample_rate)
print("Welch: %d segments, integrated PSD %.3e vs variance %.3e"
      % (psd.n_segments, psd.psd.sum() * cfg.sample_rate / psd.segment_len, np.var(snap.channels[0])))

# A 3 kHz oscillator offset on a noisy tone, from the mean lag-one phase step.
rng = np.random.default_rng(0)
tone = np.exp(2j * np.pi * 3e3 * np.arange(cfg.n_samples) / cfg.sample_rate)
tone += 0.1 * (rng.standard_normal(tone.size) + 1j * rng.standard_normal(tone.size)) / np.sqrt(2)
cfo = sp.estimate_cfo(tone, cfg.sample_rate)
print("CFO estimate of a 3 kHz tone at 20 dB SNR: %.1f Hz" % cfo.offset)

"""
Classical direction finding
===========================

Points the same four-element array at a jammer from a few positions and
compares the Bartlett, Capon and MUSIC beamscans, first in free space and
then inside a reflective hall.  Also prints the 22 AoA features that the
fusion model consumes.  Run with ``python demos/02_direction_finding.py``.
"""
import numpy as np

from jamdf import aoa, geometry as g, rfsim
from jamdf.evaluation import azimuth_error

cfg = rfsim.RecordingConfig()
grid = aoa.AngleGrid.default()
array = g.ArrayGeometry.square()
jammer = g.JammerSpec([-1.5, 2.0, 0.3])

positions = [[4.0, 1.0, 4.0], [-6.0, -3.0, 3.5], [0.5, 8.0, 4.5]]
for label, channel in (("free space", rfsim.ChannelModel(noise_power=1e-3)),
                       ("hall", rfsim.ChannelModel(rfsim.hall_reflectors(), noise_power=1e-3))):
    print(f"-- {label}")
    for i, p in enumerate(positions):
        pose = g.PoseSE3(p)
        truth = g.make_label(pose, jammer.position)
        win = rfsim.crop_window(rfsim.synth_snapshot(rfsim.Scene(jammer, channel), pose, cfg, seed=i), 2048, 1024)
        r = aoa.spatial_covariance(win)
        row = []
        for method in ("bartlett", "capon", "music"):
            res = aoa.beamscan(r, array, grid, method=method)
            row.append("%s %6.1f/%5.1f" % (method, res.azimuth, res.elevation))
        err = azimuth_error(aoa.beamscan(r, array, grid).azimuth, truth.azimuth)
        print("truth %6.1f/%5.1f | %s | MUSIC az error %.1f deg"
              % (truth.azimuth, truth.elevation, "  ".join(row), err))

# With one source and white noise the MUSIC pseudo-spectrum is infinite at
# the true direction: the steering vector is orthogonal to the noise subspace.
pose = g.PoseSE3(positions[0])
truth = g.make_label(pose, jammer.position)
clean = rfsim.synth_snapshot(rfsim.Scene(jammer, rfsim.ChannelModel(noise_power=0.0)), pose, cfg)
steer = rfsim.array_steering_vector(array, pose, g.unit_vector(truth.azimuth, truth.elevation), cfg.center_frequency)
print("noise-free MUSIC residual at the truth: %.1e" % aoa.music_residual(aoa.spatial_covariance(clean), steer))

feats = aoa.assemble_aoa_features(rfsim.crop_window(clean, 2048, 1024))
print("AoA feature vector (22):")
print("  phase/pi   ", np.round(feats[:6], 3))
print("  spread/pi  ", np.round(feats[6:12], 3))
print("  RSS/100    ", np.round(feats[12:16], 3))
print("  angles     ", np.round(feats[16:], 3), "(az/180, el/90 for MUSIC, Capon, Bartlett)")

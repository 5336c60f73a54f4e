"""Shared scenario builders for the aperture tests."""
import numpy as np

from jamdf import aperture as ap
from jamdf import geometry as g
from jamdf import imu, rfsim

CFG = rfsim.RecordingConfig()


def circle_buffer(seed, scene_factory, k=5, n=1024, spacing=0.2):
    """K windows along a random circle; ``scene_factory(rng, positions)`` returns (scene, jammer) or None."""
    rng = np.random.default_rng(seed)
    plan = g.CirclePlan(0, 0, 0, np.array([0.0, 0.0, rng.uniform(3.3, 4.8)]), rng.uniform(0.8, 2.0), 0.3)
    times = rng.uniform(0, plan.period) + spacing * np.arange(k)
    pos, _, _, q = plan.state(times)
    while True:
        made = scene_factory(rng, pos)
        if made is not None:
            break
    scene, jam = made
    wins = [rfsim.synth_snapshot(scene, g.PoseSE3(p, qq, t), CFG, seed, i, n_samples=n)
            for i, (p, qq, t) in enumerate(zip(pos, q, times))]
    buf = ap.ApertureBuffer(wins, imu.relative_poses_from_truth(pos, q, times[0]))
    return buf, g.relative_to_jammer(pos[-1], jam)


def two_ray(rng, pos, gain=0.8, excess=(1.0, 8.0), noise=1e-4):
    """LoS plus one vertical reflector whose excess path stays in ``excess`` metres."""
    dist, azj = rng.uniform(4, 12), rng.uniform(-180, 180)
    jam = np.array([dist * np.cos(np.radians(azj)), dist * np.sin(np.radians(azj)), 0.3])
    wa, wd = rng.uniform(-180, 180), rng.uniform(2, 14)
    normal = -np.array([np.cos(np.radians(wa)), np.sin(np.radians(wa)), 0.0])
    scene = rfsim.Scene(g.JammerSpec(jam), rfsim.ChannelModel([rfsim.Reflector(-normal * wd, normal, gain)], noise))
    for p in pos:
        paths = rfsim.propagation_paths(scene, p)
        if len(paths) < 2:
            return None
        extra = np.linalg.norm(paths[1][0] - p) - np.linalg.norm(jam - p)
        if not excess[0] <= extra <= excess[1]:
            return None
    return scene, jam


def line_of_sight(rng, pos, noise=0.0):
    dist, azj = rng.uniform(4, 12), rng.uniform(-180, 180)
    jam = np.array([dist * np.cos(np.radians(azj)), dist * np.sin(np.radians(azj)), 0.3])
    return rfsim.Scene(g.JammerSpec(jam), rfsim.ChannelModel(noise_power=noise)), jam

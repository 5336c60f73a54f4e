"""
A small learning campaign
=========================

Simulates forty circles, turns every 0.8 s window into the four fusion
inputs, trains the regressor on a circle-level split and compares it with
the prior-mean predictor.  The full-size campaign lives in the acceptance
suite; this one finishes in about two minutes.
Run with ``python demos/04_train_and_evaluate.py``.
"""
import time

import numpy as np

from jamdf import evaluation as E
from jamdf.config import scenario_from_dict
from jamdf.dataset import split_groups
from jamdf.fusion import TrainConfig, predict_batch, train
from jamdf.pipeline import build_features

cfg = scenario_from_dict({"campaign": {"n_circles": 40, "windows_per_circle": 15},
                          "trajectory": {"speed_cycle": [0.1, 0.2, 0.3]}})
t0 = time.time()
fs = build_features(cfg)
print("%d windows from %d circles in %.0f s" % (len(fs), np.unique(fs.circle).size, time.time() - t0))
print("input shapes:", {k: v.shape[1:] for k, v in fs.inputs().items()})

# Whole circles go to one side of the split so test windows never share
# a trajectory with training windows.
mask = split_groups(fs.circle, 0.75, seed=0)
tr, te = fs.subset(mask), fs.subset(~mask)
tc = TrainConfig()
res = train(tr.inputs(), tr.targets(tc.scale_m), tc)
print("loss: epoch 1 %.3f, epoch %d %.3f" % (res.losses[0], tc.epochs, res.losses[-1]))

pred = predict_batch(res.model, te.inputs())
reports = [E.mae_report(pred, te, "fusion"), E.mae_report(E.prior_mean_baseline(tr, len(te)), te, "prior mean")]
print(E.format_table(reports, title="held-out circles"), end="")

# Classical estimates computed during featurisation, for reference.
music = E.azimuth_error(fs.aoa[~mask, 16] * 180, te.azimuth).mean()
aper = E.azimuth_error(te.aperture[:, 0], te.azimuth).mean()
print("MUSIC azimuth MAE %.2f deg, K=5 aperture azimuth MAE %.2f deg" % (music, aper))

err = E.azimuth_error(pred.azimuth, te.azimuth)
bins = E.binned_error_analysis(err, te.distance, 2.5, "distance")
for lo, hi, m, n in zip(bins.edges[:-1], bins.edges[1:], bins.mean, bins.count):
    if n:
        print("  distance %4.1f-%4.1f m: fusion azimuth MAE %5.1f deg (%d windows)" % (lo, hi, m, n))

"""Error metrics, binned error analyses and cross-jammer comparison."""
import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InsufficientDataError, ShapeError

TABLE_COLUMNS = ("Distance [m]", "Azimuth [deg]", "Elevation [deg]")


def azimuth_error(a, b):
    """Absolute wrapped difference ``min(|a - b|, 360 - |a - b|)`` in degrees."""
    d = np.abs(np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 360.0))
    return np.minimum(d, 360.0 - d)


@dataclass(frozen=True)
class MetricsReport:
    distance_mae: float
    azimuth_mae: float
    elevation_mae: float
    n: int
    name: str = ""

    def row(self):
        return (self.distance_mae, self.azimuth_mae, self.elevation_mae)


def per_sample_errors(pred_delta, pred_az, pred_el, true_delta, true_az, true_el):
    pred_delta = np.atleast_2d(np.asarray(pred_delta, dtype=float))
    true_delta = np.atleast_2d(np.asarray(true_delta, dtype=float))
    return (np.abs(np.linalg.norm(pred_delta, axis=1) - np.linalg.norm(true_delta, axis=1)),
            azimuth_error(pred_az, true_az),
            np.abs(np.asarray(pred_el, dtype=float) - np.asarray(true_el, dtype=float)))


def mae_report(predictions, labels, name="") -> MetricsReport:
    """MAE of distance (on the norm of the displacement), azimuth and elevation.

    ``predictions`` and ``labels`` expose ``delta``, ``azimuth`` and
    ``elevation`` arrays (a :class:`~jamdf.fusion.Prediction` and a
    :class:`~jamdf.pipeline.FeatureSet` both qualify).
    """
    n_p, n_l = len(np.atleast_1d(predictions.azimuth)), len(np.atleast_1d(labels.azimuth))
    if n_p != n_l:
        raise ShapeError(f"{n_p} predictions for {n_l} labels")
    if n_p == 0:
        raise InsufficientDataError("empty evaluation set")
    d, a, e = per_sample_errors(predictions.delta, predictions.azimuth, predictions.elevation,
                                labels.delta, labels.azimuth, labels.elevation)
    return MetricsReport(float(d.mean()), float(a.mean()), float(e.mean()), n_p, name)


@dataclass(frozen=True)
class Constant:
    """A prediction that repeats one value for every sample."""
    delta: np.ndarray
    azimuth: np.ndarray
    elevation: np.ndarray


def prior_mean_baseline(train, n):
    """Predict the training-set mean displacement, circular-mean azimuth and mean elevation."""
    az = np.degrees(np.angle(np.mean(np.exp(1j * np.radians(train.azimuth)))))
    return Constant(np.tile(np.mean(train.delta, axis=0), (n, 1)), np.full(n, az),
                    np.full(n, float(np.mean(train.elevation))))


@dataclass
class BinnedErrors:
    covariate: str
    edges: np.ndarray      # (B + 1,)
    mean: np.ndarray       # (B,), NaN where absent
    count: np.ndarray      # (B,)

    @property
    def present(self):
        return self.count > 0

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count", "mean_error", "present"])
        for lo, hi, c, m in zip(self.edges[:-1], self.edges[1:], self.count, self.mean):
            w.writerow([f"{lo:.6g}", f"{hi:.6g}", int(c), "" if c == 0 else repr(float(m)), int(c > 0)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def binned_error_analysis(errors, covariate_values, bin_width, covariate="speed", origin=0.0) -> BinnedErrors:
    """Per-bin mean error over bins ``[origin + i w, origin + (i + 1) w)``.

    Bins between the lowest and highest occupied one are all reported;
    empty bins keep a count of 0 and a NaN mean.
    """
    if not bin_width > 0:
        raise ConfigError("bin_width", "must be positive")
    errors = np.asarray(errors, dtype=float)
    x = np.asarray(covariate_values, dtype=float)
    if errors.shape != x.shape:
        raise ShapeError(f"{errors.size} errors for {x.size} covariate values")
    if errors.size == 0:
        return BinnedErrors(covariate, np.array([origin]), np.zeros(0), np.zeros(0, dtype=int))
    # rounding first keeps values on a bin edge (e.g. 0.3 / 0.05) out of the lower bin
    idx = np.floor(np.round((x - origin) / bin_width, 9)).astype(int)
    lo, hi = idx.min(), idx.max()
    nb = hi - lo + 1
    count = np.bincount(idx - lo, minlength=nb)
    total = np.bincount(idx - lo, weights=errors, minlength=nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    edges = origin + bin_width * np.arange(lo, hi + 2)
    return BinnedErrors(covariate, edges, mean, count)


def format_table(reports, title=None):
    """Aligned plain-text table: one row per report, columns distance, azimuth, elevation, n."""
    names = [r.name or f"run {i}" for i, r in enumerate(reports)]
    w0 = max([len("Method")] + [len(n) for n in names])
    widths = [max(len(c), 10) for c in TABLE_COLUMNS]
    lines = []
    if title:
        lines.append(title)
    header = "Method".ljust(w0) + "  " + "  ".join(c.rjust(w) for c, w in zip(TABLE_COLUMNS, widths)) + "  n".rjust(7)
    lines += [header, "-" * len(header)]
    for name, r in zip(names, reports):
        cells = "  ".join(f"{v:{w}.3f}" for v, w in zip(r.row(), widths))
        lines.append(f"{name.ljust(w0)}  {cells}  {r.n:5d}")
    return "\n".join(lines) + "\n"


def reports_to_csv(reports, path=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "distance_mae_m", "azimuth_mae_deg", "elevation_mae_deg", "n"])
    for r in reports:
        w.writerow([r.name, repr(r.distance_mae), repr(r.azimuth_mae), repr(r.elevation_mae), r.n])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def check_compatible(train_meta, test_meta):
    a, b = train_meta.get("features"), test_meta.get("features")
    if a != b:
        diff = sorted(k for k in set(a or {}) | set(b or {}) if (a or {}).get(k) != (b or {}).get(k))
        raise ConfigError("features", f"train/test featurisation differs in {diff}")


def cross_jammer_eval(model, in_domain, foreign, train_meta=None):
    """``(in_domain_report, foreign_report)`` for one trained model.

    Both sets must be featurised with the settings the model was trained
    on (``train_meta``, defaulting to the in-domain set's metadata).
    """
    from .fusion import predict_batch

    ref = train_meta if train_meta is not None else in_domain.meta
    check_compatible(ref, in_domain.meta)
    check_compatible(ref, foreign.meta)
    rep_a = mae_report(predict_batch(model, in_domain.inputs()), in_domain,
                       name=f"{in_domain.meta.get('jammer', 'A')} (in-domain)")
    rep_b = mae_report(predict_batch(model, foreign.inputs()), foreign,
                       name=f"{foreign.meta.get('jammer', 'B')} (cross)")
    return rep_a, rep_b

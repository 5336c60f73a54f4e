"""``jamdf`` command line: simulate -> featurize -> train -> eval, plus diagnostics.

Every subcommand exits 0 on success.  Failures print the error class name
and message on stderr and exit 2 for toolkit errors, 1 for anything else.
"""
import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, InsufficientDataError, JamdfError

log = logging.getLogger("jamdf")


def _scenario_of(manifest):
    from .config import scenario_from_dict
    return scenario_from_dict(manifest.scenario)


def cmd_simulate(args):
    from .config import load_scenario, scenario_from_dict
    from .dataset import write_dataset
    from .pipeline import dataset_manifest, simulate_records

    cfg = load_scenario(args.config) if args.config else scenario_from_dict({})
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    records = simulate_records(cfg, cfg.seed)
    write_dataset(records, dataset_manifest(records, cfg, cfg.seed), args.out)
    print(f"wrote {len(records)} snapshots ({sum(r.poses is not None for r in records)} windows) to {args.out}")


def cmd_featurize(args):
    from .dataset import read_dataset
    from .pipeline import featurize_records

    records, manifest = read_dataset(args.inp)
    cfg = _scenario_of(manifest)
    if args.temporal is not None and args.temporal != cfg.campaign.temporal:
        raise ConfigError("temporal", f"dataset windows hold {cfg.campaign.temporal} snapshots; "
                                      f"re-run simulate with campaign.temporal={args.temporal}")
    if args.window is not None:
        cfg = replace(cfg, features=replace(cfg.features, window=args.window))
    fs = featurize_records(records, cfg, aperture=not args.no_aperture, jammer_id=manifest.jammer_id)
    fs.meta["source"] = str(Path(args.inp).resolve())
    fs.save(args.out)
    print(f"featurised {len(fs)} windows into {args.out}")


def cmd_train(args):
    from .config import load_training
    from .dataset import split_groups
    from .evaluation import mae_report
    from .fusion import predict_batch, save_checkpoint, train
    from .pipeline import FeatureSet

    tcfg, mcfg, split = load_training(args.config)
    fs = FeatureSet.load(args.inp)
    mask = split_groups(fs.circle, split["ratio"], split["seed"])
    tr, te = fs.subset(mask), fs.subset(~mask)
    res = train(tr.inputs(), tr.targets(tcfg.scale_m), tcfg, mcfg)
    report = mae_report(predict_batch(res.model, te.inputs()), te, name=str(fs.meta.get("jammer", "")))
    extra = {"train_meta": fs.meta, "features_dir": str(Path(args.inp).resolve()), "split": split,
             "test_circles": sorted(int(c) for c in np.unique(te.circle)), "train": tcfg.to_dict(),
             "in_domain": report.__dict__}
    save_checkpoint(res.model, args.out, extra)
    res.write_loss_csv(str(args.out) + ".loss.csv")
    print(f"trained on {len(tr)} windows; held-out azimuth MAE {report.azimuth_mae:.2f} deg; "
          f"checkpoint {args.out}")


def _eval_set(fs, extra, inp):
    """Held-out windows when ``inp`` is the training set, otherwise all windows."""
    if extra.get("features_dir") == str(Path(inp).resolve()):
        return fs.subset(np.isin(fs.circle, extra["test_circles"]))
    return fs


def cmd_eval(args):
    from .evaluation import (binned_error_analysis, check_compatible, format_table, mae_report,
                             per_sample_errors, reports_to_csv)
    from .fusion import load_checkpoint, predict_batch
    from .pipeline import FeatureSet

    model, extra = load_checkpoint(args.ckpt)
    fs = FeatureSet.load(args.inp)
    check_compatible(extra.get("train_meta", fs.meta), fs.meta)
    te = _eval_set(fs, extra, args.inp)
    pred = predict_batch(model, te.inputs())
    report = mae_report(pred, te, name="fusion")
    out = Path(args.report)
    out.mkdir(parents=True, exist_ok=True)
    reports_to_csv([report], out / "metrics.csv")
    table = format_table([report])
    (out / "metrics.txt").write_text(table)
    d, a, e = per_sample_errors(pred.delta, pred.azimuth, pred.elevation, te.delta, te.azimuth, te.elevation)
    for name, err in (("distance", d), ("azimuth", a), ("elevation", e)):
        binned_error_analysis(err, te.speed, 0.05, "speed").to_csv(out / f"{name}_vs_speed.csv")
        binned_error_analysis(err, te.distance, 1.0, "distance").to_csv(out / f"{name}_vs_distance.csv")
    print(table, end="")


def cmd_aperture(args):
    from .aoa import AngleGrid
    from .dataset import read_dataset
    from .evaluation import azimuth_error, binned_error_analysis
    from .pipeline import window_aperture
    from .rfsim import crop_window

    records, manifest = read_dataset(args.inp)
    cfg = _scenario_of(manifest)
    mode = args.mode or cfg.aperture_mode
    k = cfg.campaign.temporal
    grid = AngleGrid.default()
    rows = []
    by_circle = {}
    for r in records:
        by_circle.setdefault(r.circle, []).append(r)
    for circle in sorted(by_circle):
        recs = sorted(by_circle[circle], key=lambda r: r.snapshot.timestamp)
        crops = [crop_window(r.snapshot, cfg.features.crop_offset, cfg.features.window) for r in recs]
        for i, r in enumerate(recs):
            if r.poses is None or i < k - 1:
                continue
            (a5, e5), (a1, e1) = window_aperture(crops[i - k + 1:i + 1], r.poses, cfg.geometry,
                                                 cfg.recording.center_frequency, grid, mode)
            rows.append([r.id, r.label.speed, r.label.distance, r.label.azimuth, r.label.elevation, a5, e5, a1, e1])
    if not rows:
        raise InsufficientDataError("dataset contains no complete windows")
    arr = np.array(rows)
    err_k = azimuth_error(arr[:, 5], arr[:, 3])
    err_1 = azimuth_error(arr[:, 7], arr[:, 3])
    out = Path(args.report)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "aperture_windows.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "speed", "distance", "az_true", "el_true", f"az_k{k}", f"el_k{k}", "az_k1", "el_k1"])
        for row in rows:
            w.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
    binned_error_analysis(err_k, arr[:, 1], 0.05, "speed").to_csv(out / "azimuth_vs_speed.csv")
    binned_error_analysis(err_k, arr[:, 2], 1.0, "distance").to_csv(out / "azimuth_vs_distance.csv")
    summary = (f"aperture ({mode}) over {len(rows)} windows\n"
               f"  K={k}: azimuth MAE {err_k.mean():.3f} deg, elevation MAE {np.abs(arr[:, 6] - arr[:, 4]).mean():.3f} deg\n"
               f"  K=1: azimuth MAE {err_1.mean():.3f} deg, elevation MAE {np.abs(arr[:, 8] - arr[:, 4]).mean():.3f} deg\n")
    (out / "aperture.txt").write_text(summary)
    print(summary, end="")


def cmd_dump_spectrogram(args):
    from .dataset import read_dataset
    from .spectral import stft_spectrogram

    records, _ = read_dataset(args.inp)
    match = [r for r in records if r.id == args.snapshot]
    if not match:
        raise InsufficientDataError(f"snapshot id {args.snapshot} not in {args.inp}")
    sg = stft_spectrogram(match[0].snapshot)
    sg.to_csv(args.out)
    print(f"spectrogram {'x'.join(map(str, sg.shape))} written to {args.out}")


def cmd_cross_eval(args):
    from .evaluation import MetricsReport, check_compatible, format_table, mae_report, reports_to_csv
    from .fusion import load_checkpoint, predict_batch
    from .pipeline import FeatureSet

    model, extra = load_checkpoint(args.ckpt)
    fs = FeatureSet.load(args.inp)
    if "train_meta" not in extra or "in_domain" not in extra:
        raise ConfigError("ckpt", "checkpoint lacks training metadata; train it with `jamdf train`")
    check_compatible(extra["train_meta"], fs.meta)
    te = _eval_set(fs, extra, args.inp)
    ind = MetricsReport(**{**extra["in_domain"], "name": f"{extra['train_meta'].get('jammer', 'A')} (in-domain)"})
    cross = mae_report(predict_batch(model, te.inputs()), te, name=f"{fs.meta.get('jammer', 'B')} (cross)")
    table = format_table([ind, cross])
    if args.report:
        out = Path(args.report)
        out.mkdir(parents=True, exist_ok=True)
        reports_to_csv([ind, cross], out / "cross_eval.csv")
        (out / "cross_eval.txt").write_text(table)
    print(table, end="")


def build_parser():
    p = argparse.ArgumentParser(prog="jamdf", description="Jammer direction finding toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a recording campaign")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("featurize", help="turn a recording into fusion features")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--window", type=int)
    s.add_argument("--temporal", type=int)
    s.add_argument("--no-aperture", action="store_true", help="skip the per-window aperture estimates")
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("train", help="train the fusion regressor")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="evaluate a checkpoint")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--report", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("aperture", help="synthetic-aperture direction finding on a recording")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--report", required=True)
    s.add_argument("--mode", choices=("power", "coherent"))
    s.set_defaults(func=cmd_aperture)

    s = sub.add_parser("dump-spectrogram", help="write one snapshot's spectrogram as CSV")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--snapshot", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_dump_spectrogram)

    s = sub.add_parser("cross-eval", help="evaluate a checkpoint on another jammer's features")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--report")
    s.set_defaults(func=cmd_cross_eval)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except JamdfError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""On-disk recordings, ground-truth interpolation and circle-level splits.

A dataset directory holds::

    recording.gjdf   binary IQ payload
    labels.csv       one row per snapshot
    poses.csv        relative poses of windows ending at a snapshot (optional rows)
    manifest.json    counts, sample rate, scenario echo

``recording.gjdf`` (little endian): ``b"GJDF"``, u32 version, u32
n_snapshots, u32 n_channels, u32 n_samples, then for every snapshot an f64
timestamp followed by channel-major interleaved f32 ``I, Q`` pairs.
"""
import csv
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (BadMagicError, CoverageError, FormatError, InsufficientDataError, ShapeError,
                     TruncatedFileError, UnsupportedVersionError)
from .geometry import LabelRecord, direction_angles
from .imu import RelativePoseSet
from .rfsim import SnapshotIQ

MAGIC = b"GJDF"
VERSION = 1
HEADER = struct.Struct("<4sIIII")
RECORDING = "recording.gjdf"
LABELS = "labels.csv"
POSES = "poses.csv"
MANIFEST = "manifest.json"
LABEL_COLUMNS = ["id", "t", "dx", "dy", "dz", "az", "el", "dist", "speed", "circle"]
MAX_LABEL_OFFSET_S = 0.1


@dataclass
class DatasetManifest:
    n_snapshots: int
    sample_rate: float
    n_channels: int
    n_samples: int
    jammer_id: str = "jammer"
    seed: int = 0
    n_windows: int = 0
    scenario: dict = field(default_factory=dict)
    version: int = VERSION

    def payload_bytes(self):
        return HEADER.size + self.n_snapshots * (8 + 8 * self.n_channels * self.n_samples)

    def to_dict(self):
        return asdict(self)


@dataclass
class SnapshotRecord:
    id: int
    snapshot: SnapshotIQ
    label: LabelRecord
    poses: Optional[RelativePoseSet] = None
    circle: int = -1


def manifest_for(records, jammer_id="jammer", seed=0, scenario=None):
    if not records:
        raise InsufficientDataError("no records")
    s = records[0].snapshot
    return DatasetManifest(len(records), float(s.sample_rate), s.n_channels, s.n_samples, jammer_id, int(seed),
                           sum(r.poses is not None for r in records), dict(scenario or {}))


def _f(v):
    return repr(float(v))


def write_dataset(records: Sequence[SnapshotRecord], manifest: DatasetManifest, path):
    """Write ``records`` under directory ``path``.

    Samples are stored as f32, so complex128 input is rounded to complex64;
    a second write of the read-back records is byte-identical.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    c, n = manifest.n_channels, manifest.n_samples
    if len(records) != manifest.n_snapshots:
        raise ShapeError(f"manifest announces {manifest.n_snapshots} snapshots, got {len(records)}")
    with open(path / RECORDING, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, manifest.n_snapshots, c, n))
        for r in records:
            ch = r.snapshot.channels
            if ch.shape != (c, n):
                raise ShapeError(f"snapshot {r.id}: shape {ch.shape} differs from manifest ({c}, {n})")
            fh.write(struct.pack("<d", r.snapshot.timestamp))
            fh.write(np.ascontiguousarray(ch, dtype="<c8").tobytes())
    size = (path / RECORDING).stat().st_size
    if size != manifest.payload_bytes():
        raise FormatError(f"wrote {size} bytes, manifest implies {manifest.payload_bytes()}")

    with open(path / LABELS, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LABEL_COLUMNS)
        for r in records:
            lb = r.label
            w.writerow([r.id, _f(lb.timestamp), *map(_f, lb.delta), _f(lb.azimuth), _f(lb.elevation),
                        _f(lb.distance), _f(lb.speed), r.circle])
    with open(path / POSES, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "k", "base_t", "dx", "dy", "dz", "qw", "qx", "qy", "qz"])
        for r in records:
            if r.poses is None:
                continue
            for k, row in enumerate(r.poses.as_array()):
                w.writerow([r.id, k, _f(r.poses.base_timestamp), *map(_f, row)])
    (path / MANIFEST).write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")


def read_recording_header(path):
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
    if len(head) < HEADER.size:
        raise TruncatedFileError(f"{path}: {len(head)} bytes, shorter than the header")
    magic, version, n_snap, c, n = HEADER.unpack(head)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: format version {version} not supported")
    return n_snap, c, n


def read_dataset(path):
    """Returns ``(records, manifest)``; checks the payload before decoding any sample."""
    path = Path(path)
    rec_path = path / RECORDING
    n_snap, c, n = read_recording_header(rec_path)
    manifest = DatasetManifest(**json.loads((path / MANIFEST).read_text()))
    if (manifest.n_snapshots, manifest.n_channels, manifest.n_samples) != (n_snap, c, n):
        raise FormatError(f"{path}: manifest counts disagree with the binary header")
    expected = manifest.payload_bytes()
    size = rec_path.stat().st_size
    if size < expected:
        raise TruncatedFileError(f"{rec_path}: {size} bytes, header implies {expected}")
    if size > expected:
        raise FormatError(f"{rec_path}: {size - expected} trailing bytes after the payload")
    raw = rec_path.read_bytes()
    dtype = np.dtype([("t", "<f8"), ("iq", "<c8", (c, n))])
    body = np.frombuffer(raw, dtype=dtype, offset=HEADER.size, count=n_snap)

    labels = np.loadtxt(path / LABELS, delimiter=",", skiprows=1, ndmin=2)
    if labels.shape[0] != n_snap:
        raise FormatError(f"{path / LABELS}: {labels.shape[0]} rows for {n_snap} snapshots")
    poses = {}
    if manifest.n_windows > 0:
        pose_rows = np.loadtxt(path / POSES, delimiter=",", skiprows=1, ndmin=2)
    else:
        pose_rows = np.zeros((0, 10))
    for row in pose_rows:
        poses.setdefault(int(row[0]), []).append(row)

    records = []
    for i in range(n_snap):
        row = labels[i]
        sid = int(row[0])
        lb = LabelRecord(float(row[1]), row[2:5].copy(), float(row[7]), float(row[5]), float(row[6]),
                         float(row[8]))
        rp = None
        if sid in poses:
            arr = np.array(poses[sid])
            rp = RelativePoseSet(float(arr[0, 2]), arr[:, 3:6].copy(), arr[:, 6:10].copy())
        snap = SnapshotIQ(float(body["t"][i]), body["iq"][i].copy(), manifest.sample_rate)
        records.append(SnapshotRecord(sid, snap, lb, rp, int(row[9])))
    return records, manifest


def _label_from_delta(t, delta, speed):
    az, el = direction_angles(delta)
    return LabelRecord(float(t), delta, float(np.linalg.norm(delta)), float(az), float(el), float(speed))


def interpolate_labels(ground_truth: Sequence[LabelRecord], snapshot_times, max_offset=MAX_LABEL_OFFSET_S):
    """Labels at ``snapshot_times`` from a timestamped ground-truth log.

    Deltas and speed are interpolated linearly; distance and angles are
    recomputed from the interpolated delta.  Every query must lie inside
    the log and within ``max_offset`` seconds of a logged label.
    """
    gt = sorted(ground_truth, key=lambda r: r.timestamp)
    if len(gt) == 0:
        raise InsufficientDataError("empty ground-truth log")
    t = np.array([r.timestamp for r in gt])
    d = np.array([r.delta for r in gt])
    v = np.array([r.speed for r in gt])
    q = np.atleast_1d(np.asarray(snapshot_times, dtype=float))
    out = []
    for tq in q:
        if tq < t[0] or tq > t[-1]:
            raise CoverageError(f"t={tq:.6f} s outside ground truth [{t[0]:.6f}, {t[-1]:.6f}] s")
        j = int(np.searchsorted(t, tq))
        if j < len(t) and t[j] == tq:
            out.append(_label_from_delta(tq, d[j].copy(), v[j]))
            continue
        lo, hi = j - 1, j
        if min(tq - t[lo], t[hi] - tq) > max_offset:
            raise CoverageError(f"no ground-truth label within {max_offset * 1e3:.0f} ms of t={tq:.6f} s")
        w = (tq - t[lo]) / (t[hi] - t[lo])
        out.append(_label_from_delta(tq, (1 - w) * d[lo] + w * d[hi], (1 - w) * v[lo] + w * v[hi]))
    return out


def split_groups(groups, ratio=0.8, seed=0):
    """Boolean train mask assigning whole groups to one side."""
    groups = np.asarray(groups)
    if groups.size < 2:
        raise InsufficientDataError("splitting needs at least two records")
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    uniq = np.unique(groups)
    if uniq.size < 2:
        raise InsufficientDataError("splitting needs records from at least two circles")
    n_train = int(np.clip(round(ratio * uniq.size), 1, uniq.size - 1))
    perm = np.random.default_rng(seed).permutation(uniq.size)
    train_groups = uniq[np.sort(perm[:n_train])]
    return np.isin(groups, train_groups)


def split_dataset(records, ratio=0.8, seed=0, groups=None):
    """Circle-level ``(train, test)`` split.

    ``groups`` defaults to each record's ``circle`` attribute.
    """
    records = list(records)
    if groups is None:
        groups = [r.circle for r in records]
    mask = split_groups(groups, ratio, seed)
    return ([r for r, m in zip(records, mask) if m], [r for r, m in zip(records, mask) if not m])

"""Motion-compensated synthetic-aperture direction finding.

Each buffered window is reduced to a unit 4-vector spatial signature and
back-projected onto a far-field angle grid through the steering vector of
its *virtual* element positions, i.e. the array offsets moved by the
window's relative pose.  Directions are expressed in the body frame of the
first buffered window.

Two combination modes exist:

``power``
    ``P(u) = sum_k |a_k(u)^H s_k|^2``.  Needs no carrier-phase coherence
    between snapshots; gains come from averaging over pose diversity.
``coherent``
    ``P(u) = |sum_k a_k(u)^H s_k|^2`` with every signature phase-referenced
    to channel ``ref`` of the first window.  Valid only when the jammer
    waveform and oscillators stay locked across snapshots; this is what
    narrows the main lobe as the virtual aperture grows.
"""
from dataclasses import dataclass
from typing import List

import numpy as np

from . import quaternion as quat
from .aoa import AngleGrid, _grid_csv, hermitian_eigh, spatial_covariance
from .errors import InsufficientDataError
from .geometry import GPS_L1, ArrayGeometry
from .imu import RelativePoseSet
from .rfsim import SnapshotIQ, steering_matrix

MODES = ("power", "coherent")


@dataclass
class ApertureBuffer:
    windows: List[SnapshotIQ]
    poses: RelativePoseSet
    carrier: float = GPS_L1
    geometry: ArrayGeometry = None

    def __post_init__(self):
        if self.geometry is None:
            self.geometry = ArrayGeometry.square()
        if len(self.windows) == 0:
            raise InsufficientDataError("aperture buffer is empty")
        if len(self.windows) != len(self.poses):
            raise ValueError(f"{len(self.windows)} windows but {len(self.poses)} poses")
        ts = np.array([w.timestamp for w in self.windows])
        if np.any(np.diff(ts) <= 0):
            raise ValueError("buffered windows must have strictly increasing timestamps")

    def __len__(self):
        return len(self.windows)

    def subset(self, idx):
        idx = list(idx)
        poses = RelativePoseSet(self.poses.base_timestamp, self.poses.positions[idx],
                                self.poses.orientations[idx])
        # re-anchor on the first kept entry
        q0 = poses.orientations[0]
        r0t = quat.to_matrix(q0).T
        pos = (poses.positions - poses.positions[0]) @ r0t.T
        ori = quat.normalize(quat.multiply(quat.conj(q0), poses.orientations))
        return ApertureBuffer([self.windows[i] for i in idx],
                              RelativePoseSet(self.windows[idx[0]].timestamp, pos, ori),
                              self.carrier, self.geometry)


@dataclass
class ApertureMap:
    grid: AngleGrid
    power: np.ndarray
    argmax: tuple
    half_power_width_az: float
    mode: str = "power"

    def to_csv(self, path):
        """Rows of ``az, el, power_db``."""
        _grid_csv(path, self.grid, self.power)


def window_signature(window: SnapshotIQ, ref=0):
    """Dominant covariance eigenvector, unit norm, channel ``ref`` real positive."""
    _, vecs = hermitian_eigh(spatial_covariance(window).matrix)
    e = vecs[:, -1]
    ph = e[ref] / abs(e[ref]) if abs(e[ref]) > 0 else 1.0
    return e / ph / np.linalg.norm(e)


def coherent_signature(window: SnapshotIQ, reference: SnapshotIQ, ref=0):
    """Lag-0 cross-correlation of every channel with the reference window's channel ``ref``."""
    x = window.channels
    r = reference.channels[ref]
    n = min(x.shape[1], r.shape[0])
    s = x[:, :n] @ np.conj(r[:n])
    norm = np.linalg.norm(s)
    return s / norm if norm > 0 else s


def virtual_elements(buf: ApertureBuffer):
    """(K, 4, 3) element positions of every pose in the first window's frame."""
    offs = buf.geometry.element_offsets
    return np.stack([p + quat.rotate(q, offs)
                     for p, q in zip(buf.poses.positions, buf.poses.orientations)])


def half_power_width(row, step, circular):
    """Width in grid units * ``step`` of the contiguous lobe above half the peak."""
    row = np.asarray(row, dtype=float)
    n = row.size
    i0 = int(np.argmax(row))
    half = row[i0] / 2

    def crossing(direction):
        for k in range(1, n):
            j = i0 + direction * k
            if not circular and not 0 <= j < n:
                return (k - 1) * step
            j %= n
            prev = (i0 + direction * (k - 1)) % n
            if row[j] < half:
                frac = (row[prev] - half) / (row[prev] - row[j])
                return (k - 1 + frac) * step
        return None

    left, right = crossing(-1), crossing(1)
    if left is None or right is None:
        return n * step
    return min(left + right, n * step)


def backprojection_map(buf: ApertureBuffer, grid: AngleGrid = None, mode="power", ref=0) -> ApertureMap:
    if len(buf) == 0:
        raise InsufficientDataError("aperture buffer is empty")
    if mode not in MODES:
        raise ValueError(f"unknown aperture mode {mode!r}")
    grid = AngleGrid.default() if grid is None else grid
    dirs = grid.directions()
    elems = virtual_elements(buf)
    if mode == "power":
        sigs = [window_signature(w, ref) for w in buf.windows]
        power = np.zeros(dirs.shape[0])
        for e, s in zip(elems, sigs):
            power += np.abs(steering_matrix(e, dirs, buf.carrier).conj() @ s) ** 2
    else:
        field = np.zeros(dirs.shape[0], dtype=complex)
        for e, w in zip(elems, buf.windows):
            s = coherent_signature(w, buf.windows[0], ref)
            field += steering_matrix(e, dirs, buf.carrier).conj() @ s
        power = np.abs(field) ** 2
    power = power.reshape(grid.shape)
    az, el = grid.argmax(power)
    j = int(np.searchsorted(grid.elevations, el))
    step = float(grid.azimuths[1] - grid.azimuths[0]) if grid.azimuths.size > 1 else 360.0
    circular = grid.azimuths.size * step >= 360.0 - 1e-9
    width = half_power_width(power[:, j], step, circular)
    return ApertureMap(grid, power, (az, el), width, mode)


def aperture_estimate(buf: ApertureBuffer, grid: AngleGrid = None, mode="power"):
    """(azimuth, elevation, peak-to-mean quality) of the back-projected map."""
    amap = backprojection_map(buf, grid, mode)
    quality = float(amap.power.max() / amap.power.mean())
    return amap.argmax[0], amap.argmax[1], quality

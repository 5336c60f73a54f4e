"""Classical direction finding for the four-element array.

Spatial covariance, Bartlett/Capon/MUSIC beamscans over an
azimuth-elevation grid and the 22-entry feature vector fed to the fusion
model.  Grid ties are broken towards the lowest azimuth, then the lowest
elevation.
"""
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from . import quaternion as quat
from .errors import InsufficientDataError, NumericalError, ShapeError
from .geometry import GPS_L1, ArrayGeometry, unit_vector
from .rfsim import steering_matrix

PAIRS = tuple(combinations(range(4), 2))
N_FEATURES = 22
METHODS = ("bartlett", "capon", "music")


@dataclass(frozen=True)
class SpatialCovariance:
    matrix: np.ndarray
    snapshot_count: int


@dataclass(frozen=True)
class AngleGrid:
    azimuths: np.ndarray
    elevations: np.ndarray

    def __post_init__(self):
        az = np.asarray(self.azimuths, dtype=float)
        el = np.asarray(self.elevations, dtype=float)
        if az.size == 0 or el.size == 0:
            raise ValueError("angle grid must be non-empty")
        if np.any(np.diff(az) <= 0) or np.any(np.diff(el) <= 0):
            raise ValueError("grid axes must be strictly increasing")
        if az[0] <= -180 or az[-1] > 180 or el[0] < -90 or el[-1] > 90:
            raise ValueError("grid outside (-180, 180] x [-90, 90]")
        object.__setattr__(self, "azimuths", az)
        object.__setattr__(self, "elevations", el)

    @classmethod
    def default(cls, step=1.0, full_elevation=False):
        az = np.arange(-180 + step, 180 + step / 2, step)
        el = np.arange(-90, (90 if full_elevation else 0) + step / 2, step)
        return cls(az, el)

    @property
    def shape(self):
        return (self.azimuths.size, self.elevations.size)

    def directions(self):
        """(n_az * n_el, 3) unit vectors, azimuth-major order."""
        az, el = np.meshgrid(self.azimuths, self.elevations, indexing="ij")
        return unit_vector(az.ravel(), el.ravel())

    def argmax(self, power):
        """(az, el) of the maximum of an (n_az, n_el) map, deterministic on ties."""
        p = np.asarray(power)
        flat = int(np.argmax(p.ravel()))   # first occurrence: lowest az, then lowest el
        i, j = np.unravel_index(flat, p.shape)
        return float(self.azimuths[i]), float(self.elevations[j])


@lru_cache(maxsize=16)
def _grid_steering(offsets_key, az_key, el_key, carrier):
    grid = AngleGrid(np.array(az_key), np.array(el_key))
    offsets = np.array(offsets_key).reshape(4, 3)
    a = steering_matrix(offsets, grid.directions(), carrier)
    a.setflags(write=False)
    return a


def grid_steering(geometry: ArrayGeometry, grid: AngleGrid, carrier=GPS_L1, orientation=None):
    """(G, 4) steering vectors over the grid (cached per geometry and grid)."""
    offsets = geometry.element_offsets
    if orientation is not None:
        offsets = quat.rotate(orientation, offsets)
    return _grid_steering(tuple(np.round(offsets, 15).ravel()), tuple(grid.azimuths),
                          tuple(grid.elevations), float(carrier))


def _channels(window):
    x = window.channels if hasattr(window, "channels") else np.asarray(window)
    x = np.atleast_2d(x)
    if x.shape[0] != 4:
        raise ShapeError(f"expected 4 channels, got {x.shape[0]}")
    if x.shape[1] < 1:
        raise InsufficientDataError("empty window")
    return x


def spatial_covariance(window) -> SpatialCovariance:
    x = _channels(window)
    r = x @ x.conj().T / x.shape[1]
    return SpatialCovariance(0.5 * (r + r.conj().T), x.shape[1])


def hermitian_eigh(a, tol=1e-15, max_sweeps=50):
    """Eigen-decomposition of a small Hermitian matrix by cyclic Jacobi rotations.

    Returns ascending eigenvalues and the matching orthonormal eigenvectors
    as columns.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = np.linalg.norm(a[~np.eye(n, dtype=bool)])
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                # D = diag(1, conj(phase)) makes the (p, q) block real
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                u = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ u
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def noise_subspace(r, source_count=1):
    if not 1 <= source_count < 4:
        raise ValueError("source_count must be 1, 2 or 3 for a four-element array")
    _, vecs = hermitian_eigh(r)
    return vecs[:, :4 - source_count]


def diagonal_loading(r, rel_cond=1e-10, eps_scale=1e-6):
    """Load ``eps_scale * tr(R) / 4`` onto R when it is near singular."""
    tr = float(np.real(np.trace(r)))
    w, _ = hermitian_eigh(r)
    if tr <= 0:
        raise NumericalError("covariance has zero power")
    if w[0] <= rel_cond * w[-1]:
        return r + eps_scale * tr / 4 * np.eye(4)
    return r


def _quad(a, m):
    return np.real(np.einsum("gi,ij,gj->g", a.conj(), m, a))


@dataclass
class BeamscanResult:
    spectrum: np.ndarray     # (n_az, n_el)
    azimuth: float
    elevation: float
    method: str
    grid: AngleGrid = None

    def to_csv(self, path):
        """Rows of ``az, el, power_db`` (azimuth-major)."""
        _grid_csv(path, self.grid, self.spectrum)


def _grid_csv(path, grid, power):
    az, el = np.meshgrid(grid.azimuths, grid.elevations, indexing="ij")
    db = 10 * np.log10(np.maximum(np.asarray(power, dtype=float), 1e-300))
    with open(path, "w") as fh:
        fh.write("az,el,power_db\n")
        for a, e, p in zip(az.ravel(), el.ravel(), db.ravel()):
            fh.write(f"{a:.6g},{e:.6g},{p:.9g}\n")


def beamscan(r, geometry: ArrayGeometry, grid: AngleGrid, carrier=GPS_L1, method="music",
             source_count=1, loading=None, orientation=None) -> BeamscanResult:
    """Spatial spectrum over ``grid``.

    ``loading`` overrides the automatic Capon diagonal load (absolute value
    added to the diagonal).
    """
    m = r.matrix if isinstance(r, SpatialCovariance) else np.asarray(r, dtype=complex)
    a = grid_steering(geometry, grid, carrier, orientation)
    if method == "bartlett":
        p = _quad(a, m)
    elif method == "capon":
        ml = m + loading * np.eye(4) if loading is not None else diagonal_loading(m)
        try:
            inv = np.linalg.inv(ml)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular covariance; apply diagonal loading") from exc
        p = 1.0 / np.maximum(_quad(a, inv), np.finfo(float).tiny)
    elif method == "music":
        if source_count >= 4:
            raise ValueError("source_count must be < 4")
        en = noise_subspace(m, source_count)
        proj = np.sum(np.abs(a.conj() @ en) ** 2, axis=1)
        p = 1.0 / np.maximum(proj, np.finfo(float).tiny)
    else:
        raise ValueError(f"unknown beamscan method {method!r}")
    p = p.reshape(grid.shape)
    az, el = grid.argmax(p)
    return BeamscanResult(p, az, el, method, grid)


def music_residual(r, steering, source_count=1):
    """``a^H E_n E_n^H a / ||a||^2`` for one steering vector."""
    m = r.matrix if isinstance(r, SpatialCovariance) else r
    en = noise_subspace(m, source_count)
    a = np.asarray(steering).ravel()
    return float(np.sum(np.abs(a.conj() @ en) ** 2) / np.real(np.vdot(a, a)))


@dataclass
class PairwiseFeatures:
    mean_phase: np.ndarray      # (6,) rad
    circular_std: np.ndarray    # (6,) rad
    rss_db: np.ndarray          # (4,) dB re full scale


def pairwise_phase_features(window) -> PairwiseFeatures:
    x = _channels(window)
    power = np.mean(np.abs(x) ** 2, axis=1)
    for i, p in enumerate(power):
        if p == 0:
            raise NumericalError(f"channel {i} has zero power")
    mean_phase = np.empty(6)
    circ_std = np.empty(6)
    n = x.shape[1]
    for k, (i, j) in enumerate(PAIRS):
        prod = x[i] * np.conj(x[j])
        mean_phase[k] = np.angle(prod.sum())
        nz = np.abs(prod)
        unit = np.where(nz > 0, prod / np.where(nz > 0, nz, 1.0), 0.0)
        rbar = min(1.0, abs(unit.sum()) / n)
        circ_std[k] = np.sqrt(-2 * np.log(rbar)) if rbar > 0 else np.inf
    return PairwiseFeatures(mean_phase, circ_std, 10 * np.log10(power))


def assemble_aoa_features(window, geometry: ArrayGeometry = None, grid: AngleGrid = None,
                          carrier=GPS_L1):
    """22 features scaled into [-1, 1].

    Layout: 6 pairwise mean phase differences / pi, 6 pairwise circular
    standard deviations / pi, 4 channel powers in dBFS / 100, then
    (az / 180, el / 90) for MUSIC, Capon and Bartlett.
    """
    geometry = ArrayGeometry.square() if geometry is None else geometry
    grid = AngleGrid.default() if grid is None else grid
    pf = pairwise_phase_features(window)
    r = spatial_covariance(window)
    angles = []
    for method in ("music", "capon", "bartlett"):
        res = beamscan(r, geometry, grid, carrier, method)
        angles += [res.azimuth / 180.0, res.elevation / 90.0]
    feats = np.concatenate([
        pf.mean_phase / np.pi,
        np.minimum(pf.circular_std / np.pi, 1.0),
        pf.rss_db / 100.0,
        angles,
    ])
    return np.clip(feats, -1.0, 1.0)

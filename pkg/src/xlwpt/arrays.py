"""Array layouts, antenna gain patterns and look angles.

Angles follow the usual physics convention: ``theta`` is measured from the
local +z axis and ``phi`` is the azimuth from local +x towards local +y, so a
unit direction is ``[sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)]``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "ArrayLayout",
    "GainPattern",
    "ISOTROPIC",
    "make_ura",
    "local_angles",
    "direction_angles",
    "gain_lookup",
    "polarization_loss",
    "frame_from_boresight",
]

CENTER = "center"


def _unit(v, name="vector", tol=1e-9):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > tol:
        raise ValueError(f"{name} must have unit norm (got {n!r})")
    return v


@dataclass
class ArrayLayout:
    """Ordered antenna positions of an array (metres).

    ``orientation`` is the 3x3 rotation that maps global direction vectors into
    the local antenna frame (``local = orientation @ global``). Mirrored
    layouts carry an improper orientation (determinant -1).
    """

    positions: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))
    polarization: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos.reshape(1, 3)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError("positions must be an (L, 3) array with L >= 1")
        if len(np.unique(pos, axis=0)) != len(pos):
            raise ValueError("array positions must be pairwise distinct")
        self.positions = pos
        self.orientation = np.array(self.orientation, dtype=float).reshape(3, 3)
        self.polarization = _unit(self.polarization, "polarization")

    @property
    def num_elements(self) -> int:
        return self.positions.shape[0]

    @property
    def center(self) -> np.ndarray:
        """Center of gravity of the element positions."""
        return self.positions.mean(axis=0)

    @property
    def relative_positions(self) -> np.ndarray:
        return self.positions - self.center

    def __len__(self):
        return self.num_elements


def frame_from_boresight(boresight, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Rotation whose local +x is ``boresight`` and local +z is as close to ``up`` as possible.

    Rows of the returned matrix are the local axes expressed in global
    coordinates.
    """
    x = _unit(boresight, "boresight")
    up = np.asarray(up, dtype=float)
    z = up - np.dot(up, x) * x
    if np.linalg.norm(z) < 1e-9:
        # boresight along `up`; fall back to global x as the reference
        ref = np.array([1.0, 0.0, 0.0]) if abs(x[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        z = ref - np.dot(ref, x) * x
    z /= np.linalg.norm(z)
    y = np.cross(z, x)
    return np.vstack([x, y, z])


def make_ura(
    Ly: int,
    Lz: int,
    dy: float,
    dz: float,
    center=(0.0, 0.0, 0.0),
    plane_normal=(1.0, 0.0, 0.0),
    polarization=(0.0, 0.0, 1.0),
) -> ArrayLayout:
    """Uniform rectangular array lying in the plane orthogonal to ``plane_normal``.

    The grid spans the local y and z axes of :func:`frame_from_boresight`
    (``plane_normal`` is the boresight). Element ``iy * Lz + iz`` sits at
    column ``iy`` and row ``iz``, i.e. z runs fastest.
    """
    if int(Ly) < 1 or int(Lz) < 1:
        raise ValueError("element counts must be >= 1")
    if not (dy > 0 and dz > 0):
        raise ValueError("element spacings must be positive")
    R = frame_from_boresight(plane_normal)
    ey, ez = R[1], R[2]
    oy = (np.arange(Ly) - (Ly - 1) / 2.0) * dy
    oz = (np.arange(Lz) - (Lz - 1) / 2.0) * dz
    gy, gz = np.meshgrid(oy, oz, indexing="ij")
    rel = gy.reshape(-1, 1) * ey + gz.reshape(-1, 1) * ez
    return ArrayLayout(np.asarray(center, dtype=float) + rel, orientation=R,
                       polarization=polarization)


def direction_angles(local_dirs):
    """Spherical angles of local-frame direction vectors (any norm > 0).

    Returns ``(theta, phi)`` with ``theta`` in [0, pi] and ``phi`` in
    (-pi, pi]; ``phi`` is 0 on the poles.
    """
    d = np.asarray(local_dirs, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise ValueError("direction of zero length")
    theta = np.arccos(np.clip(d[..., 2] / r, -1.0, 1.0))
    rho = np.hypot(d[..., 0], d[..., 1])
    pole = rho <= 1e-15 * r
    phi = np.where(pole, 0.0, np.arctan2(d[..., 1], d[..., 0]))
    phi = np.where(phi <= -np.pi, phi + 2 * np.pi, phi)
    return theta, phi


def local_angles(layout: ArrayLayout, element_index: Union[int, str], target):
    """Look angles from an element (or the array center) towards ``target``.

    Parameters
    ----------
    layout : ArrayLayout
    element_index : int or ``"center"``
    target : array_like, shape (3,)

    Returns
    -------
    theta, phi : float
        Angles in the layout's local frame.
    """
    if isinstance(element_index, str):
        if element_index != CENTER:
            raise ValueError(f"unknown element selector {element_index!r}")
        origin = layout.center
    else:
        origin = layout.positions[element_index]
    d = np.asarray(target, dtype=float) - origin
    if np.linalg.norm(d) == 0:
        raise ValueError("target coincides with the element position")
    theta, phi = direction_angles(layout.orientation @ d)
    return float(theta), float(phi)


@dataclass
class GainPattern:
    """Antenna power-gain pattern.

    A tabulated pattern holds linear power gains on a regular
    ``theta x phi`` grid (radians). Interpolation is bilinear, periodic in
    azimuth, and clamped at the edges of the elevation grid.
    """

    kind: str = "isotropic"
    theta: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None
    table: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "isotropic":
            return
        if self.kind != "tabulated":
            raise ValueError(f"unknown pattern kind {self.kind!r}")
        th = np.asarray(self.theta, dtype=float).ravel()
        ph = np.asarray(self.phi, dtype=float).ravel()
        tab = np.asarray(self.table, dtype=float).reshape(len(th), len(ph))
        if np.any(tab < 0) or not np.all(np.isfinite(tab)):
            raise ValueError("gain table must be finite and nonnegative")
        if np.any(np.diff(th) <= 0) or np.any(np.diff(ph) <= 0):
            raise ValueError("pattern grid axes must be strictly increasing")
        if len(ph) > 1 and ph[-1] - ph[0] > 2 * np.pi + 1e-9:
            raise ValueError("azimuth grid spans more than one turn")
        # a closing column at phi0 + 2pi duplicates the first one
        if len(ph) > 1 and np.isclose(ph[-1] - ph[0], 2 * np.pi):
            ph, tab = ph[:-1], tab[:, :-1]
        self.theta, self.phi, self.table = th, ph, tab

    @classmethod
    def constant(cls, gain: float) -> "GainPattern":
        return cls("tabulated", np.array([0.0, np.pi]), np.array([0.0]),
                   np.full((2, 1), float(gain)))

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "GainPattern":
        """Load a ``theta_deg,phi_deg,gain_db`` file describing a full rectangular grid."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["theta_deg", "phi_deg", "gain_db"]:
                raise ValueError(f"{path}: expected header theta_deg,phi_deg,gain_db")
            rows = [(float(r["theta_deg"]), float(r["phi_deg"]), float(r["gain_db"]))
                    for r in reader]
        if not rows:
            raise ValueError(f"{path}: empty pattern file")
        arr = np.array(rows)
        th = np.unique(arr[:, 0])
        ph = np.unique(arr[:, 1])
        if len(arr) != len(th) * len(ph):
            raise ValueError(f"{path}: pattern samples do not form a rectangular grid")
        table = np.full((len(th), len(ph)), np.nan)
        table[np.searchsorted(th, arr[:, 0]), np.searchsorted(ph, arr[:, 1])] = 10 ** (arr[:, 2] / 10)
        if np.isnan(table).any():
            raise ValueError(f"{path}: duplicate or missing grid samples")
        return cls("tabulated", np.deg2rad(th), np.deg2rad(ph), table)

    def __call__(self, theta, phi):
        """Vectorized lookup without range checks."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if self.kind == "isotropic":
            return np.ones(np.broadcast(theta, phi).shape)
        th, ph, tab = self.theta, self.phi, self.table
        if len(th) > 1:
            it = np.clip(np.searchsorted(th, theta, side="right") - 1, 0, len(th) - 2)
            ft = np.clip((theta - th[it]) / (th[it + 1] - th[it]), 0.0, 1.0)
        else:
            it = np.zeros(theta.shape, dtype=int)
            ft = np.zeros(theta.shape)
        it1 = np.minimum(it + 1, len(th) - 1)
        if len(ph) > 1:
            period = 2 * np.pi
            x = np.mod(phi - ph[0], period) + ph[0]
            ext = np.append(ph, ph[0] + period)
            ip = np.clip(np.searchsorted(ext, x, side="right") - 1, 0, len(ph) - 1)
            fp = (x - ext[ip]) / (ext[ip + 1] - ext[ip])
            ip1 = (ip + 1) % len(ph)
        else:
            ip = ip1 = np.zeros(phi.shape, dtype=int)
            fp = np.zeros(phi.shape)
        g0 = tab[it, ip] * (1 - fp) + tab[it, ip1] * fp
        g1 = tab[it1, ip] * (1 - fp) + tab[it1, ip1] * fp
        return g0 * (1 - ft) + g1 * ft


ISOTROPIC = GainPattern()


def gain_lookup(pattern: GainPattern, theta: float, phi: float) -> float:
    """Linear power gain of ``pattern`` at ``(theta, phi)``."""
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"theta={theta!r} outside [0, pi]")
    if not -np.pi < phi <= np.pi:
        raise ValueError(f"phi={phi!r} outside (-pi, pi]")
    return float(pattern(theta, phi))


def polarization_loss(rho_t: Sequence[float], rho_r: Sequence[float]) -> float:
    """Co-polar amplitude factor ``|rho_t . rho_r|`` of two unit polarization vectors."""
    return float(abs(np.dot(_unit(rho_t, "rho_t"), _unit(rho_r, "rho_r"))))

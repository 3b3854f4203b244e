"""Bounded planar walls, ray casting, visibility and image-source mirroring."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .arrays import ArrayLayout

__all__ = [
    "Wall",
    "Ray",
    "EPS_PARALLEL",
    "EPS_SEGMENT",
    "ray_wall_intersection",
    "householder_matrix",
    "mirror_points",
    "mirror_array",
    "segment_visible",
    "segments_blocked",
    "specular_points",
    "visibility_vector",
]

EPS_PARALLEL = 1e-12
EPS_SEGMENT = 1e-9
_ORTHO_TOL = 1e-12


@dataclass
class Wall:
    """Finite rectangle lying in the plane ``{p : p . normal = offset}``.

    In-plane coordinates are measured from the foot point ``offset * normal``
    along ``u_axis`` and ``v_axis``; ``limits`` is ``(u_min, u_max, v_min,
    v_max)``. Normals should point into the scene interior, which fixes the
    sign of :meth:`signed_distance`.
    """

    normal: np.ndarray
    offset: float
    u_axis: np.ndarray
    v_axis: np.ndarray
    limits: tuple
    reflection_coeff: float = 1.0
    name: str = ""

    def __post_init__(self):
        self.normal = np.asarray(self.normal, dtype=float)
        self.u_axis = np.asarray(self.u_axis, dtype=float)
        self.v_axis = np.asarray(self.v_axis, dtype=float)
        self.offset = float(self.offset)
        self.limits = tuple(float(x) for x in self.limits)
        n, u, v = self.normal, self.u_axis, self.v_axis
        for name, vec in (("normal", n), ("u_axis", u), ("v_axis", v)):
            if vec.shape != (3,) or abs(np.linalg.norm(vec) - 1) > _ORTHO_TOL:
                raise ValueError(f"wall {self.name!r}: {name} must be a unit 3-vector")
        if max(abs(n @ u), abs(n @ v), abs(u @ v)) > _ORTHO_TOL:
            raise ValueError(f"wall {self.name!r}: normal and extent axes must be orthogonal")
        if len(self.limits) != 4:
            raise ValueError(f"wall {self.name!r}: limits must be (u_min, u_max, v_min, v_max)")
        umin, umax, vmin, vmax = self.limits
        if not (umin < umax and vmin < vmax):
            raise ValueError(f"wall {self.name!r}: empty extent {self.limits}")
        if self.reflection_coeff < 0:
            raise ValueError(f"wall {self.name!r}: reflection coefficient must be >= 0")

    @classmethod
    def from_axes(cls, normal, offset, u_axis, limits, v_axis=None, **kw) -> "Wall":
        """Build a wall, deriving ``v_axis = normal x u_axis`` when not given."""
        n = np.asarray(normal, dtype=float)
        u = np.asarray(u_axis, dtype=float)
        v = np.cross(n, u) if v_axis is None else np.asarray(v_axis, dtype=float)
        return cls(n, offset, u, v, limits, **kw)

    @property
    def origin(self) -> np.ndarray:
        return self.offset * self.normal

    def signed_distance(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.normal - self.offset

    def plane_coords(self, points):
        d = np.asarray(points, dtype=float) - self.origin
        return d @ self.u_axis, d @ self.v_axis

    def contains(self, points) -> np.ndarray:
        """True where in-plane coordinates of ``points`` fall inside the extent."""
        u, v = self.plane_coords(points)
        umin, umax, vmin, vmax = self.limits
        return (u >= umin) & (u <= umax) & (v >= vmin) & (v <= vmax)


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.direction = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(self.direction) - 1) > _ORTHO_TOL:
            raise ValueError("ray direction must be a unit vector")

    def at(self, length: float) -> np.ndarray:
        return self.origin + length * self.direction


def ray_wall_intersection(ray: Ray, wall: Wall):
    """Forward hit of ``ray`` on the bounded ``wall``.

    Returns
    -------
    (l_int, point) or None
        ``None`` for (near-)parallel rays, hits behind the origin, and hits
        outside the wall extent.
    """
    denom = float(ray.direction @ wall.normal)
    if abs(denom) < EPS_PARALLEL:
        return None
    l_int = (wall.offset - float(ray.origin @ wall.normal)) / denom
    if l_int <= 0:
        return None
    point = ray.at(l_int)
    if not wall.contains(point):
        return None
    return l_int, point


def householder_matrix(normal) -> np.ndarray:
    """Reflection ``I - 2 n n^T`` across the plane through the origin with normal ``n``."""
    n = np.asarray(normal, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1) > 1e-9:
        raise ValueError("householder_matrix needs a unit 3-vector")
    return np.eye(3) - 2.0 * np.outer(n, n)


def mirror_points(points, wall: Wall) -> np.ndarray:
    """Mirror image of arbitrary points across the wall plane."""
    p = np.asarray(points, dtype=float)
    return p - 2.0 * np.multiply.outer(wall.signed_distance(p), wall.normal)


def mirror_array(layout: ArrayLayout, wall: Wall) -> ArrayLayout:
    """Image of ``layout`` across ``wall``.

    Relative positions are reflected with the Householder matrix and the
    center of gravity is moved by twice its signed distance to the plane.
    The element orientation is reflected too; polarization is kept.
    """
    H = householder_matrix(wall.normal)
    center = layout.center
    d_w = float(center @ wall.normal) - wall.offset
    new_center = center - 2.0 * d_w * wall.normal
    rel = layout.relative_positions @ H.T
    return ArrayLayout(new_center + rel, orientation=layout.orientation @ H,
                       polarization=layout.polarization)


def segments_blocked(p_a, p_b, wall: Wall, eps: float = EPS_SEGMENT) -> np.ndarray:
    """Vectorized test whether segments ``p_a[i] -> p_b[i]`` cross ``wall``.

    Only the open segment shrunk by ``eps`` at both ends counts.
    """
    a = np.atleast_2d(np.asarray(p_a, dtype=float))
    b = np.atleast_2d(np.asarray(p_b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    diff = b - a
    length = np.linalg.norm(diff, axis=1)
    e = diff / length[:, None]
    denom = e @ wall.normal
    ok = np.abs(denom) >= EPS_PARALLEL
    with np.errstate(divide="ignore", invalid="ignore"):
        l_int = np.where(ok, (wall.offset - a @ wall.normal) / np.where(ok, denom, 1.0), -1.0)
    ok &= (l_int > eps) & (l_int < length - eps)
    hit = np.zeros(len(a), dtype=bool)
    if ok.any():
        pts = a[ok] + l_int[ok, None] * e[ok]
        hit[ok] = wall.contains(pts)
    return hit


def _blocked_by_any(p_a, p_b, walls: Iterable[Wall], exclude=None) -> np.ndarray:
    a = np.atleast_2d(np.asarray(p_a, dtype=float))
    b = np.atleast_2d(np.asarray(p_b, dtype=float))
    n = max(len(a), len(b))
    blocked = np.zeros(n, dtype=bool)
    for w in walls:
        if exclude is not None and (w is exclude or (w.name and w.name == exclude)):
            continue
        blocked |= segments_blocked(a, b, w)
    return blocked


def segment_visible(p_a, p_b, walls: Sequence[Wall], exclude=None) -> bool:
    """True iff the open segment between ``p_a`` and ``p_b`` hits no wall.

    ``exclude`` names (or is) a wall ignored by the test.
    """
    if np.array_equal(np.asarray(p_a, float), np.asarray(p_b, float)):
        raise ValueError("segment endpoints coincide")
    return not bool(_blocked_by_any(p_a, p_b, walls, exclude)[0])


def specular_points(layout: ArrayLayout, receiver, wall: Wall):
    """Intersections of receiver-to-image-element rays with the wall plane.

    Returns ``(points, valid)``; ``valid`` marks rays that reach the plane
    between the receiver and the image element, inside the wall extent.
    """
    r = np.asarray(receiver, dtype=float)
    diff = layout.positions - r
    dist = np.linalg.norm(diff, axis=1)
    e = diff / dist[:, None]
    denom = e @ wall.normal
    ok = np.abs(denom) >= EPS_PARALLEL
    with np.errstate(divide="ignore", invalid="ignore"):
        l_int = np.where(ok, (wall.offset - r @ wall.normal) / np.where(ok, denom, 1.0), np.nan)
    pts = r + l_int[:, None] * e
    ok &= (l_int > 0) & (l_int < dist)
    valid = np.zeros(len(dist), dtype=bool)
    valid[ok] = wall.contains(pts[ok])
    return pts, valid


def visibility_vector(
    component_layout: ArrayLayout,
    receiver,
    generating_wall: Optional[Wall],
    walls: Sequence[Wall] = (),
    occlusion_enabled: bool = False,
) -> np.ndarray:
    """Per-element 0/1 visibility of one propagation component at ``receiver``.

    For the line of sight (``generating_wall=None``) an element is visible
    when its segment to the receiver crosses no wall. For an image layout the
    specular point on the generating wall has to exist; with
    ``occlusion_enabled`` both legs of the reflected path must also be free
    of the remaining walls.
    """
    r = np.asarray(receiver, dtype=float)
    pos = component_layout.positions
    if generating_wall is None:
        return (~_blocked_by_any(r, pos, walls)).astype(np.int8)
    spec_pts, valid = specular_points(component_layout, r, generating_wall)
    if occlusion_enabled and valid.any():
        idx = np.flatnonzero(valid)
        physical = mirror_points(pos[idx], generating_wall)
        leg1 = _blocked_by_any(r, spec_pts[idx], walls, exclude=generating_wall)
        leg2 = _blocked_by_any(spec_pts[idx], physical, walls, exclude=generating_wall)
        valid[idx[leg1 | leg2]] = False
    return valid.astype(np.int8)

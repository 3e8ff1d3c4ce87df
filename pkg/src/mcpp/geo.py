"""WGS84 <-> local tangent plane conversion and planar polygon primitives.

Planar points are stored as ``(x, y)`` = ``(east, north)`` in meters. The
down axis is dropped: altitude is a mission parameter, not a path coordinate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import shapely.geometry

from .errors import InputDomainError

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

MAX_RANGE_M = 1.0e6
EDGE_TOL = 1e-9


class GeoPoint(NamedTuple):
    lat: float
    lon: float


class NedPoint(NamedTuple):
    x: float  # east
    y: float  # north


def _check_latlon(lat, lon) -> None:
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if not (np.all(np.isfinite(lat)) and np.all(np.isfinite(lon))):
        raise InputDomainError("latitude/longitude must be finite")
    if np.any(np.abs(lat) > 90.0):
        raise InputDomainError(f"latitude out of range [-90, 90]: {lat}")
    if np.any(np.abs(lon) > 180.0):
        raise InputDomainError(f"longitude out of range [-180, 180]: {lon}")


def geodetic_to_ecef(lat, lon, h=0.0):
    """Degrees in, ECEF meters out. Works elementwise on arrays."""
    phi = np.radians(lat)
    lam = np.radians(lon)
    sin_phi = np.sin(phi)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_phi**2)
    x = (n + h) * np.cos(phi) * np.cos(lam)
    y = (n + h) * np.cos(phi) * np.sin(lam)
    z = (n * (1.0 - WGS84_E2) + h) * sin_phi
    return x, y, z


def ecef_to_geodetic(x, y, z, iterations: int = 8):
    """Inverse of :func:`geodetic_to_ecef` by fixed-point iteration on latitude."""
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    lon = np.arctan2(y, x)
    p = np.hypot(x, y)
    lat = np.arctan2(z, p * (1.0 - WGS84_E2))
    h = np.zeros_like(p)
    for _ in range(iterations):
        sin_lat = np.sin(lat)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat**2)
        h = p / np.cos(lat) - n
        lat = np.arctan2(z, p * (1.0 - WGS84_E2 * n / (n + h)))
    return np.degrees(lat), np.degrees(lon), h


def _enu_basis(ref: GeoPoint) -> np.ndarray:
    """Rows are the east, north and up unit vectors at ``ref`` in ECEF."""
    phi = math.radians(ref.lat)
    lam = math.radians(ref.lon)
    sp, cp = math.sin(phi), math.cos(phi)
    sl, cl = math.sin(lam), math.cos(lam)
    return np.array(
        [
            [-sl, cl, 0.0],
            [-sp * cl, -sp * sl, cp],
            [cp * cl, cp * sl, sp],
        ]
    )


def geo_to_ned_array(lat, lon, ref: GeoPoint) -> tuple[np.ndarray, np.ndarray]:
    """Project geodetic points (on the ellipsoid) onto the tangent plane at ``ref``."""
    _check_latlon(lat, lon)
    _check_latlon(ref.lat, ref.lon)
    origin = np.array(geodetic_to_ecef(ref.lat, ref.lon))
    pts = np.stack(geodetic_to_ecef(np.asarray(lat, float), np.asarray(lon, float)), axis=-1)
    delta = pts - origin
    if np.any(np.linalg.norm(delta, axis=-1) > MAX_RANGE_M):
        raise InputDomainError("point farther than 1000 km from the reference")
    basis = _enu_basis(ref)
    east = delta @ basis[0]
    north = delta @ basis[1]
    return east, north


def ned_to_geo_array(x, y, ref: GeoPoint) -> tuple[np.ndarray, np.ndarray]:
    """Exact inverse of :func:`geo_to_ned_array`.

    The tangent-plane point is pushed along the reference up-vector until it
    meets the ellipsoid surface, which undoes the orthographic projection.
    """
    _check_latlon(ref.lat, ref.lon)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InputDomainError("planar coordinates must be finite")
    if np.any(np.hypot(x, y) > MAX_RANGE_M):
        raise InputDomainError("planar offset exceeds 1000 km")
    basis = _enu_basis(ref)
    origin = np.array(geodetic_to_ecef(ref.lat, ref.lon))
    p0 = origin + x[..., None] * basis[0] + y[..., None] * basis[1]
    up = basis[2]
    w = np.array([1.0 / WGS84_A**2, 1.0 / WGS84_A**2, 1.0 / WGS84_B**2])
    qa = np.sum(w * up * up)
    qb = 2.0 * np.sum(w * p0 * up, axis=-1)
    qc = np.sum(w * p0 * p0, axis=-1) - 1.0
    disc = qb * qb - 4.0 * qa * qc
    if np.any(disc < 0):
        raise InputDomainError("planar point does not map back onto the ellipsoid")
    # root closest to the plane, written in the cancellation-free form
    u = 2.0 * qc / (-qb - np.sqrt(disc))
    pts = p0 + u[..., None] * up
    lat, lon, _ = ecef_to_geodetic(pts[..., 0], pts[..., 1], pts[..., 2])
    return lat, lon


def wgs84_to_ned(p: GeoPoint, ref: GeoPoint) -> NedPoint:
    x, y = geo_to_ned_array(p.lat, p.lon, ref)
    return NedPoint(float(x), float(y))


def ned_to_wgs84(p: NedPoint, ref: GeoPoint) -> GeoPoint:
    lat, lon = ned_to_geo_array(p.x, p.y, ref)
    return GeoPoint(float(lat), float(lon))


# ---------------------------------------------------------------------------
# planar polygons


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise InputDomainError(f"inverted bounding box {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, other: "BoundingBox", tol: float = 1e-9) -> bool:
        return (
            self.x_min <= other.x_min + tol
            and self.y_min <= other.y_min + tol
            and self.x_max >= other.x_max - tol
            and self.y_max >= other.y_max - tol
        )


def _signed_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _clean_ring(ring) -> np.ndarray:
    arr = np.array(ring, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputDomainError("a ring must be a sequence of (x, y) pairs")
    if len(arr) > 1 and np.allclose(arr[0], arr[-1]):
        arr = arr[:-1]
    if len(arr) < 3:
        raise InputDomainError(f"a ring needs at least 3 vertices, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise InputDomainError("ring vertices must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class Polygon:
    """Outer ring plus holes (no-fly zones).

    Orientation is normalized on construction: outer counter-clockwise,
    holes clockwise. Rings are stored open (no repeated closing vertex).
    """

    outer: np.ndarray
    holes: tuple = ()

    def __post_init__(self):
        outer = _clean_ring(self.outer)
        holes = tuple(_clean_ring(h) for h in self.holes)
        if _signed_area(outer) < 0:
            outer = outer[::-1].copy()
        holes = tuple(h[::-1].copy() if _signed_area(h) > 0 else h for h in holes)
        shell = shapely.geometry.Polygon(outer)
        if shell.area <= 0 or not shell.is_valid:
            raise InputDomainError("outer ring is degenerate or self-intersecting")
        for h in holes:
            hp = shapely.geometry.Polygon(h)
            if hp.area <= 0 or not hp.is_valid:
                raise InputDomainError("hole ring is degenerate or self-intersecting")
            if not shell.contains(hp) or shell.exterior.intersects(hp.exterior):
                raise InputDomainError("every hole must lie strictly inside the outer ring")
        if holes and not shapely.geometry.Polygon(outer, holes).is_valid:
            raise InputDomainError("holes overlap each other")
        _freeze(self, outer, holes)

    @classmethod
    def _trusted(cls, outer: np.ndarray, holes: Sequence[np.ndarray]) -> "Polygon":
        # skips validation; used for rigid motions of an already valid polygon
        obj = object.__new__(cls)
        _freeze(obj, outer, tuple(holes))
        return obj

    @property
    def rings(self) -> tuple:
        return (self.outer, *self.holes)

    def __repr__(self) -> str:
        return f"Polygon({len(self.outer)} vertices, {len(self.holes)} holes)"


def _freeze(obj: Polygon, outer: np.ndarray, holes: tuple) -> None:
    outer = np.ascontiguousarray(outer, dtype=float)
    outer.setflags(write=False)
    frozen_holes = []
    for h in holes:
        h = np.ascontiguousarray(h, dtype=float)
        h.setflags(write=False)
        frozen_holes.append(h)
    object.__setattr__(obj, "outer", outer)
    object.__setattr__(obj, "holes", tuple(frozen_holes))


_CHUNK = 1 << 21


def _ring_test(px: np.ndarray, py: np.ndarray, ring: np.ndarray):
    """Return (inside_by_crossing, on_edge) masks for one ring.

    Crossing number with a ray towards +x, half-open in y. Points are
    processed in chunks so the (points x edges) temporaries stay bounded.
    """
    x1, y1 = ring[:, 0], ring[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    dx, dy = x2 - x1, y2 - y1
    flat = dy == 0
    slope = np.where(flat, 0.0, dx / np.where(flat, 1.0, dy))
    len2 = dx * dx + dy * dy
    inside = np.empty(px.shape, dtype=bool)
    on_edge = np.empty(px.shape, dtype=bool)
    step = max(1, _CHUNK // len(ring))
    for lo in range(0, len(px), step):
        cx = px[lo : lo + step, None]
        cy = py[lo : lo + step, None]
        straddle = (y1 > cy) != (y2 > cy)
        xi = x1 + (cy - y1) * slope
        inside[lo : lo + step] = np.count_nonzero(straddle & (cx < xi), axis=1) % 2 == 1
        qx = cx - x1
        qy = cy - y1
        t = np.clip((qx * dx + qy * dy) / len2, 0.0, 1.0)
        d2 = (qx - t * dx) ** 2 + (qy - t * dy) ** 2
        on_edge[lo : lo + step] = np.any(d2 <= EDGE_TOL**2, axis=1)
    return inside, on_edge


def points_in_polygon(points, poly: Polygon) -> np.ndarray:
    """Vectorized containment. Edge points are inside the outer ring and
    inside holes, so a point on a hole boundary is excluded."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    px = np.ascontiguousarray(pts[:, 0])
    py = np.ascontiguousarray(pts[:, 1])
    inside, edge = _ring_test(px, py, poly.outer)
    result = inside | edge
    for hole in poly.holes:
        if not np.any(result):
            break
        h_in, h_edge = _ring_test(px, py, hole)
        result &= ~(h_in | h_edge)
    return result


def point_in_polygon(p, poly: Polygon) -> bool:
    return bool(points_in_polygon([tuple(p)], poly)[0])


def polygon_area(poly: Polygon) -> float:
    return abs(_signed_area(poly.outer)) - sum(abs(_signed_area(h)) for h in poly.holes)


def ring_centroid(ring: np.ndarray) -> NedPoint:
    """Area centroid of a simple ring."""
    x, y = ring[:, 0], ring[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return NedPoint(float(cx), float(cy))


def bounding_box(poly: Polygon) -> BoundingBox:
    o = poly.outer
    return BoundingBox(
        float(o[:, 0].min()), float(o[:, 0].max()), float(o[:, 1].min()), float(o[:, 1].max())
    )


def _rotation(theta_deg: float) -> np.ndarray:
    t = math.radians(theta_deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]])


def transform_points(points, sx: float, sy: float, theta: float, pivot) -> np.ndarray:
    """Rotate by -theta about ``pivot`` then translate by (-sx, -sy)."""
    pts = np.asarray(points, dtype=float)
    piv = np.asarray(pivot, dtype=float)
    rot = _rotation(-theta)
    return (pts - piv) @ rot.T + piv - np.array([sx, sy])


def inverse_transform_points(points, sx: float, sy: float, theta: float, pivot) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    piv = np.asarray(pivot, dtype=float)
    rot = _rotation(theta)
    return (pts + np.array([sx, sy]) - piv) @ rot.T + piv


def check_placement(sx: float, sy: float, theta: float, d_n: float | None = None) -> None:
    if not (0.0 <= theta <= 90.0):
        raise InputDomainError(f"theta must lie in [0, 90] degrees, got {theta}")
    upper = math.inf if d_n is None else d_n
    for name, v in (("sx", sx), ("sy", sy)):
        if not (0.0 <= v <= upper):
            raise InputDomainError(f"{name} must lie in [0, {upper}], got {v}")


def transform_polygon(
    poly: Polygon, sx: float, sy: float, theta: float, pivot, d_n: float | None = None
) -> Polygon:
    check_placement(sx, sy, theta, d_n)
    return Polygon._trusted(
        transform_points(poly.outer, sx, sy, theta, pivot),
        [transform_points(h, sx, sy, theta, pivot) for h in poly.holes],
    )

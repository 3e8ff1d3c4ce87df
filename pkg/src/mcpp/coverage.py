"""Sensor footprint model and simulated coverage of planned paths.

The ROI is rasterized into small square coverage cells. Every straight path
segment sweeps a rectangle as wide as the camera footprint, extended by half
a footprint past each end, and every cell center inside that rectangle gets
one scan.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputDomainError
from .geo import Polygon, bounding_box, points_in_polygon, polygon_area

MIN_CELL_AREA = 0.25
MAX_CELL_AREA = 4.0
MAX_CELLS = 4_000_000
DEFAULT_HFOV = 73.4
DEFAULT_HRES = 5472


def _half_tan(hfov: float) -> float:
    if not 0.0 < hfov < 180.0:
        raise InputDomainError(f"HFOV must lie in (0, 180) degrees, got {hfov}")
    return math.tan(math.radians(hfov) / 2.0)


def footprint_width(h: float, hfov: float) -> float:
    if not h > 0:
        raise InputDomainError(f"altitude must be positive, got {h}")
    return 2.0 * h * _half_tan(hfov)


def scanning_density(h: float, hfov: float, p_o: float) -> float:
    """Spacing between adjacent passes for a fractional overlap ``p_o`` in [0, 2)."""
    if not 0.0 <= p_o < 2.0:
        raise InputDomainError(f"overlap must lie in [0, 2), got {p_o}")
    if not h > 0:
        raise InputDomainError(f"altitude must be positive, got {h}")
    return (2.0 - p_o) * h * _half_tan(hfov)


def ground_sampling_distance(h: float, hfov: float, hres: int) -> float:
    if not hres > 0:
        raise InputDomainError(f"horizontal resolution must be positive, got {hres}")
    return footprint_width(h, hfov) / hres


def altitude_for_density(d_s: float, hfov: float, p_o: float) -> float:
    """Altitude at which ``scanning_density`` equals ``d_s``."""
    if not 0.0 <= p_o < 2.0:
        raise InputDomainError(f"overlap must lie in [0, 2), got {p_o}")
    return d_s / ((2.0 - p_o) * _half_tan(hfov))


@dataclass(frozen=True)
class SensorModel:
    altitude: float
    hfov: float = DEFAULT_HFOV
    hres: int = DEFAULT_HRES
    overlap: float = 0.5

    def __post_init__(self):
        if not self.altitude > 0:
            raise InputDomainError(f"altitude must be positive, got {self.altitude}")
        _half_tan(self.hfov)
        if not self.hres > 0:
            raise InputDomainError("horizontal resolution must be positive")
        if not 0.0 <= self.overlap < 2.0:
            raise InputDomainError(f"overlap must lie in [0, 2), got {self.overlap}")

    @classmethod
    def for_density(cls, d_s: float, hfov: float = DEFAULT_HFOV, overlap: float = 0.5, hres: int = DEFAULT_HRES):
        return cls(altitude_for_density(d_s, hfov, overlap), hfov, hres, overlap)

    @property
    def footprint(self) -> float:
        return footprint_width(self.altitude, self.hfov)

    @property
    def d_s(self) -> float:
        return scanning_density(self.altitude, self.hfov, self.overlap)

    @property
    def gsd(self) -> float:
        return ground_sampling_distance(self.altitude, self.hfov, self.hres)


@dataclass(frozen=True, eq=False)
class CoverageRaster:
    origin: tuple  # (x, y) of the lower-left raster corner
    cell_side: float
    mask: np.ndarray  # (nx, ny) cells whose center lies in the ROI
    counts: np.ndarray  # (nx, ny) scans per cell, 0 outside the mask

    @property
    def shape(self) -> tuple:
        return self.mask.shape

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.mask.shape
        cx = self.origin[0] + (np.arange(nx) + 0.5) * self.cell_side
        cy = self.origin[1] + (np.arange(ny) + 0.5) * self.cell_side
        return cx, cy


@dataclass(frozen=True, eq=False)
class CoverageReport:
    poc: float
    pooc: float
    turns: int
    n_turns: float
    length_km: float
    n_length: float
    histogram: tuple  # frequency of cells scanned 0, 1, 2, ... times
    max_scans: int
    raster: CoverageRaster = field(repr=False)

    def summary(self) -> dict:
        return {
            "PoC": self.poc,
            "PoOC": self.pooc,
            "turns": self.turns,
            "n_turns": self.n_turns,
            "length_km": self.length_km,
            "n_length": self.n_length,
            "max_scans": self.max_scans,
            "histogram": list(self.histogram),
            "cell_side": self.raster.cell_side,
        }


def choose_cell_side(roi: Polygon, requested: float = 1.0) -> float:
    """Requested side, coarsened for huge ROIs and clamped to the allowed cell areas."""
    box = bounding_box(roi)
    side = max(requested, math.sqrt(box.area / MAX_CELLS))
    return float(np.clip(side, math.sqrt(MIN_CELL_AREA), math.sqrt(MAX_CELL_AREA)))


def rasterize(roi: Polygon, cell_side: float) -> CoverageRaster:
    if not math.sqrt(MIN_CELL_AREA) - 1e-12 <= cell_side <= math.sqrt(MAX_CELL_AREA) + 1e-12:
        raise InputDomainError(
            f"coverage cell area must lie in [{MIN_CELL_AREA}, {MAX_CELL_AREA}] m^2, got side {cell_side}"
        )
    box = bounding_box(roi)
    nx = max(1, math.ceil(box.width / cell_side))
    ny = max(1, math.ceil(box.height / cell_side))
    origin = (box.x_min, box.y_min)
    cx = origin[0] + (np.arange(nx) + 0.5) * cell_side
    cy = origin[1] + (np.arange(ny) + 0.5) * cell_side
    gx, gy = np.meshgrid(cx, cy, indexing="ij")
    mask = points_in_polygon(np.stack([gx.ravel(), gy.ravel()], axis=1), roi).reshape(nx, ny)
    if not mask.any():
        raise InputDomainError("ROI contains no coverage cell")
    return CoverageRaster(origin, cell_side, mask, np.zeros((nx, ny), dtype=np.int32))


def merge_collinear(points, closed: bool = False, tol: float = 1e-9) -> np.ndarray:
    """Drop repeated points and interior points of straight runs."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return pts
    keep = [pts[0]]
    for p in pts[1:]:
        if np.linalg.norm(p - keep[-1]) > tol:
            keep.append(p)
    pts = np.array(keep)
    if closed and len(pts) > 1 and np.linalg.norm(pts[0] - pts[-1]) <= tol:
        pts = pts[:-1]
    if len(pts) < 3:
        return np.vstack([pts, pts[:1]]) if closed and len(pts) == 2 else pts

    def straight(a, b, c) -> bool:
        u, v = b - a, c - b
        cross = u[0] * v[1] - u[1] * v[0]
        scale = np.linalg.norm(u) * np.linalg.norm(v)
        return abs(cross) <= 1e-9 * scale and float(np.dot(u, v)) > 0

    n = len(pts)
    if closed:
        idx = [i for i in range(n) if not straight(pts[i - 1], pts[i], pts[(i + 1) % n])]
        out = pts[idx] if idx else pts[:1]
        return np.vstack([out, out[:1]])
    idx = [0] + [i for i in range(1, n - 1) if not straight(pts[i - 1], pts[i], pts[i + 1])] + [n - 1]
    return pts[idx]


def _is_closed(points: np.ndarray) -> bool:
    return len(points) > 2 and np.allclose(points[0], points[-1], atol=1e-9)


def polyline_turns(points) -> int:
    """Heading changes along the merged polyline (cyclic when it is closed)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    closed = _is_closed(pts)
    merged = merge_collinear(pts, closed=closed)
    if closed:
        return max(0, len(merged) - 1) if len(merged) > 2 else 0
    return max(0, len(merged) - 2)


def polyline_length(points) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1))) if len(pts) > 1 else 0.0


def stamp_segment(raster: CoverageRaster, a, b, width: float) -> None:
    """Add one scan to every cell whose center is in the segment's swath."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = width / 2.0
    seg = b - a
    length = float(np.hypot(*seg))
    u = seg / length if length > 0 else np.array([1.0, 0.0])
    v = np.array([-u[1], u[0]])
    corners = np.array(
        [a - u * half - v * half, a - u * half + v * half, b + u * half - v * half, b + u * half + v * half]
    )
    c = raster.cell_side
    ox, oy = raster.origin
    nx, ny = raster.shape
    i0 = max(0, int(math.floor((corners[:, 0].min() - ox) / c - 0.5)))
    i1 = min(nx, int(math.ceil((corners[:, 0].max() - ox) / c + 0.5)))
    j0 = max(0, int(math.floor((corners[:, 1].min() - oy) / c - 0.5)))
    j1 = min(ny, int(math.ceil((corners[:, 1].max() - oy) / c + 0.5)))
    if i0 >= i1 or j0 >= j1:
        return
    cx = ox + (np.arange(i0, i1) + 0.5) * c - a[0]
    cy = oy + (np.arange(j0, j1) + 0.5) * c - a[1]
    along = cx[:, None] * u[0] + cy[None, :] * u[1]
    across = cx[:, None] * v[0] + cy[None, :] * v[1]
    hit = (along >= -half) & (along <= length + half) & (np.abs(across) <= half)
    window = raster.counts[i0:i1, j0:j1]
    window += (hit & raster.mask[i0:i1, j0:j1]).astype(np.int32)


def _path_waypoints(path) -> np.ndarray:
    pts = getattr(path, "waypoints_ned", path)
    return np.asarray(pts, dtype=float).reshape(-1, 2)


def simulate_coverage(
    paths: Iterable,
    roi: Polygon,
    sensor: SensorModel,
    cell_side: float | None = None,
    turns: int | None = None,
    length_m: float | None = None,
) -> CoverageReport:
    """Scan-count raster and Table-style metrics for a set of paths.

    ``paths`` holds CoveragePath objects or plain (k, 2) NED waypoint arrays.
    Turn and length totals come from the path objects when available,
    otherwise from the waypoint geometry, unless given explicitly.
    """
    paths = list(paths)
    side = choose_cell_side(roi) if cell_side is None else cell_side
    raster = rasterize(roi, side)
    width = sensor.footprint
    turn_sum = 0
    length_sum = 0.0
    for path in paths:
        pts = _path_waypoints(path)
        closed = _is_closed(pts)
        merged = merge_collinear(pts, closed=closed)
        if len(merged) == 1:
            stamp_segment(raster, merged[0], merged[0], width)
        for a, b in zip(merged[:-1], merged[1:]):
            stamp_segment(raster, a, b, width)
        turn_sum += int(path.turns) if hasattr(path, "turns") else polyline_turns(pts)
        length_sum += float(path.length) if hasattr(path, "length") else polyline_length(pts)
    if turns is not None:
        turn_sum = int(turns)
    if length_m is not None:
        length_sum = float(length_m)
    return build_report(raster, polygon_area(roi), turn_sum, length_sum)


def build_report(raster: CoverageRaster, area: float, turns: int, length_m: float) -> CoverageReport:
    counts = raster.counts[raster.mask]
    total = counts.size
    hist = np.bincount(counts, minlength=1) / total
    poc = 100.0 * np.count_nonzero(counts >= 1) / total
    pooc = 100.0 * np.count_nonzero(counts >= 2) / total
    turns_n, n_turns, length_km, n_length = path_metrics_from(turns, length_m, area)
    return CoverageReport(
        poc=float(poc),
        pooc=float(pooc),
        turns=turns_n,
        n_turns=n_turns,
        length_km=length_km,
        n_length=n_length,
        histogram=tuple(float(h) for h in hist),
        max_scans=int(counts.max()),
        raster=raster,
    )


def path_metrics_from(turns: int, length_m: float, area: float) -> tuple:
    """(turns, turns per 1000 m^2, length in km, meters per 1000 m^2)."""
    if not area > 0:
        raise InputDomainError(f"ROI area must be positive, got {area}")
    per = area / 1000.0
    return int(turns), turns / per, length_m / 1000.0, length_m / per


def path_metrics(path, area: float) -> tuple:
    return path_metrics_from(path.turns, path.length, area)


def heatmap_array(raster: CoverageRaster) -> np.ndarray:
    """uint8 raster, north up; scan counts scaled so the maximum maps to 255."""
    top = max(1, int(raster.counts.max()))
    img = np.round(raster.counts * (255.0 / top)).astype(np.uint8)
    return img.T[::-1]


def write_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise InputDomainError(f"{path} is not a binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    return np.frombuffer(data[pos + 1 : pos + 1 + w * h], dtype=np.uint8).reshape(h, w)


def write_histogram_csv(path, histogram: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scans", "frequency"])
        for k, f in enumerate(histogram):
            w.writerow([k, repr(float(f))])

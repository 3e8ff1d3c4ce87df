"""Node lattice construction and Obstacle / FreeSpace / Uav labeling.

The ROI is rigidly moved onto a fixed, axis-aligned lattice whose cell edges
sit on multiples of the node spacing ``d_n``. Every lattice cell is a node;
its four ``d_s`` quadrants are the sub-cells the coverage tour walks through.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import ndimage

from .errors import FleetConfigurationError, InfeasibleDiscretizationError, InputDomainError
from .geo import (
    BoundingBox,
    NedPoint,
    Polygon,
    bounding_box,
    inverse_transform_points,
    points_in_polygon,
    ring_centroid,
    transform_points,
    transform_polygon,
)

_SNAP_TOL = 1e-9


class NodeState(enum.IntEnum):
    OBSTACLE = 0
    FREE = 1
    UAV = 2


class Mode(str, enum.Enum):
    STRICT = "strict"  # every sub-cell center must be inside (geo-fence)
    BETTER = "better"  # only the node center must be inside

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        aliases = {"strictinpoly": cls.STRICT, "bettercoverage": cls.BETTER}
        key = str(value).lower().replace("_", "").replace("-", "")
        if key in aliases:
            return aliases[key]
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputDomainError(f"unknown labeling mode {value!r}") from None


class Placement(NamedTuple):
    sx: float = 0.0
    sy: float = 0.0
    theta: float = 0.0


IDENTITY = Placement(0.0, 0.0, 0.0)


def node_spacing(d_s: float) -> float:
    if not (d_s > 0 and math.isfinite(d_s)):
        raise InputDomainError(f"scanning density must be positive, got {d_s}")
    return 2.0 * d_s


@dataclass(frozen=True)
class AugmentedBox:
    """Standard box snapped outward to the lattice plus a one-cell margin ring."""

    standard: BoundingBox
    box: BoundingBox
    d_n: float

    @property
    def nx(self) -> int:
        return int(round(self.box.width / self.d_n))

    @property
    def ny(self) -> int:
        return int(round(self.box.height / self.d_n))


def augmented_box(roi: Polygon, d_n: float) -> AugmentedBox:
    std = bounding_box(roi)
    x0 = (math.floor(std.x_min / d_n + _SNAP_TOL) - 1) * d_n
    y0 = (math.floor(std.y_min / d_n + _SNAP_TOL) - 1) * d_n
    x1 = (math.ceil(std.x_max / d_n - _SNAP_TOL) + 1) * d_n
    y1 = (math.ceil(std.y_max / d_n - _SNAP_TOL) + 1) * d_n
    return AugmentedBox(std, BoundingBox(x0, x1, y0, y1), d_n)


def nominal_dims(box: BoundingBox, d_n: float) -> tuple[int, int]:
    """Node counts along x and y from the standard box width and height."""
    return (
        int(math.floor(box.width / d_n + _SNAP_TOL)),
        int(math.floor(box.height / d_n + _SNAP_TOL)),
    )


def label_free(tpoly: Polygon, abox: AugmentedBox, d_s: float, mode: Mode) -> np.ndarray:
    """Boolean (nx, ny) array of free nodes for a polygon already in grid frame.

    The outer margin ring of the augmented box lies outside the standard box
    and is never free, so only interior nodes are tested.
    """
    d_n = abox.d_n
    nx, ny = abox.nx, abox.ny
    free = np.zeros((nx, ny), dtype=bool)
    if nx <= 2 or ny <= 2:
        return free
    cx = abox.box.x_min + d_n * (np.arange(1, nx - 1) + 0.5)
    cy = abox.box.y_min + d_n * (np.arange(1, ny - 1) + 0.5)
    gx, gy = np.meshgrid(cx, cy, indexing="ij")
    centers = np.stack([gx.ravel(), gy.ravel()], axis=1)
    if mode is Mode.BETTER:
        inner = points_in_polygon(centers, tpoly)
    else:
        h = d_s / 2.0
        offsets = np.array([(-h, -h), (h, -h), (h, h), (-h, h)])
        sub = (centers[None, :, :] + offsets[:, None, :]).reshape(-1, 2)
        inner = points_in_polygon(sub, tpoly).reshape(4, -1).all(axis=0)
    free[1:-1, 1:-1] = inner.reshape(nx - 2, ny - 2)
    return free


@dataclass(frozen=True, eq=False)
class NodeGrid:
    """Labeled node lattice in the placement (grid) frame.

    ``states[ix, iy]`` holds the state of the node whose center is
    ``origin + (ix, iy) * d_n``; ix grows east, iy grows north.
    """

    states: np.ndarray
    d_n: float
    origin: NedPoint
    placement: Placement
    pivot: NedPoint
    mode: Mode
    box: AugmentedBox
    uav_cells: tuple = ()  # ((ix, iy), uav_id) pairs

    @classmethod
    def from_mask(cls, free, d_s: float = 1.0, starts=(), mode: Mode | str = Mode.STRICT):
        """Grid straight from a boolean (nx, ny) free-space mask, identity placement.

        ``starts`` lists one (ix, iy) node per UAV, in UAV id order.
        """
        free = np.asarray(free, dtype=bool)
        if free.ndim != 2:
            raise InputDomainError("free mask must be two-dimensional")
        d_n = node_spacing(d_s)
        nx, ny = free.shape
        states = np.where(free, NodeState.FREE, NodeState.OBSTACLE).astype(np.int8)
        cells = []
        for uid, (ix, iy) in enumerate(starts):
            if not free[ix, iy]:
                raise FleetConfigurationError(f"UAV {uid} starts on a non-free node {(ix, iy)}")
            if states[ix, iy] == NodeState.UAV:
                raise FleetConfigurationError(f"UAV {uid} shares node {(ix, iy)} with another UAV")
            states[ix, iy] = NodeState.UAV
            cells.append(((int(ix), int(iy)), uid))
        box = BoundingBox(0.0, nx * d_n, 0.0, ny * d_n)
        return cls(
            states,
            d_n,
            NedPoint(d_n / 2.0, d_n / 2.0),
            IDENTITY,
            NedPoint(0.0, 0.0),
            Mode.parse(mode),
            AugmentedBox(box, box, d_n),
            tuple(cells),
        )

    @property
    def d_s(self) -> float:
        return self.d_n / 2.0

    @property
    def dims(self) -> tuple[int, int]:
        return self.states.shape

    @property
    def nominal_dims(self) -> tuple[int, int]:
        return nominal_dims(self.box.standard, self.d_n)

    @property
    def free_mask(self) -> np.ndarray:
        return self.states != NodeState.OBSTACLE

    @property
    def free_count(self) -> int:
        return int(np.count_nonzero(self.free_mask))

    def node_center(self, ix, iy) -> np.ndarray:
        """Grid-frame center of node(s) ``(ix, iy)``."""
        return np.stack(
            [self.origin.x + np.asarray(ix) * self.d_n, self.origin.y + np.asarray(iy) * self.d_n],
            axis=-1,
        )

    def to_grid_frame(self, points) -> np.ndarray:
        sx, sy, theta = self.placement
        return transform_points(points, sx, sy, theta, self.pivot)

    def to_ned(self, points) -> np.ndarray:
        sx, sy, theta = self.placement
        return inverse_transform_points(points, sx, sy, theta, self.pivot)

    def uav_starts(self) -> dict[int, tuple[int, int]]:
        return {uid: cell for cell, uid in self.uav_cells}

    def with_uavs(self, positions: Sequence) -> "NodeGrid":
        """Snap NED positions to their nearest free node and relabel them Uav."""
        states = np.where(self.states == NodeState.UAV, NodeState.FREE, self.states).astype(np.int8)
        free_idx = np.argwhere(states == NodeState.FREE)
        if len(positions) == 0:
            return replace(self, states=states, uav_cells=())
        if len(free_idx) == 0:
            raise InfeasibleDiscretizationError("no free node to place UAVs on")
        pts = self.to_grid_frame(np.asarray(positions, dtype=float).reshape(-1, 2))
        centers = self.node_center(free_idx[:, 0], free_idx[:, 1])
        cells = []
        for uid, p in enumerate(pts):
            d2 = np.sum((centers - p) ** 2, axis=1)
            k = int(np.argmin(d2))  # first minimum = lowest (ix, iy)
            cell = (int(free_idx[k, 0]), int(free_idx[k, 1]))
            if any(cell == c for c, _ in cells):
                raise FleetConfigurationError(
                    f"UAV {uid} snaps to node {cell}, already taken by another UAV"
                )
            cells.append((cell, uid))
        for (ix, iy), _ in cells:
            states[ix, iy] = NodeState.UAV
        return replace(self, states=states, uav_cells=tuple(cells))

    def restricted_to(self, keep: np.ndarray) -> "NodeGrid":
        """Relabel free nodes outside ``keep`` as Obstacle (UAV nodes dropped too)."""
        states = self.states.copy()
        states[~keep] = NodeState.OBSTACLE
        cells = tuple((c, u) for c, u in self.uav_cells if keep[c])
        return replace(self, states=states, uav_cells=cells)

    def to_pgm_array(self) -> np.ndarray:
        """uint8 raster, north up: Obstacle=0, FreeSpace=128, Uav=255."""
        lut = np.array([0, 128, 255], dtype=np.uint8)
        return lut[self.states.T[::-1]]


def default_pivot(roi: Polygon) -> NedPoint:
    return ring_centroid(roi.outer)


def build_grid(
    roi: Polygon,
    placement: Placement = IDENTITY,
    d_s: float = 1.0,
    mode: Mode | str = Mode.STRICT,
    uav_positions: Sequence = (),
    pivot: NedPoint | None = None,
) -> NodeGrid:
    mode = Mode.parse(mode)
    d_n = node_spacing(d_s)
    placement = Placement(*placement)
    if pivot is None:
        pivot = default_pivot(roi)
    tpoly = transform_polygon(roi, *placement, pivot=pivot, d_n=d_n)
    abox = augmented_box(tpoly, d_n)
    free = label_free(tpoly, abox, d_s, mode)
    if not free.any():
        raise InfeasibleDiscretizationError(
            f"no free node for placement {tuple(placement)} at d_s={d_s}"
        )
    states = np.where(free, NodeState.FREE, NodeState.OBSTACLE).astype(np.int8)
    origin = NedPoint(abox.box.x_min + d_n / 2.0, abox.box.y_min + d_n / 2.0)
    grid = NodeGrid(states, d_n, origin, placement, NedPoint(*pivot), mode, abox)
    return grid.with_uavs(uav_positions) if len(uav_positions) else grid


def connected_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected labeling; label 0 is background."""
    labels, n = ndimage.label(mask, structure=ndimage.generate_binary_structure(2, 1))
    return labels, n


def largest_component(mask: np.ndarray) -> np.ndarray:
    labels, n = connected_components(mask)
    if n <= 1:
        return mask.copy()
    sizes = np.bincount(labels.ravel())[1:]
    best = int(np.argmax(sizes)) + 1  # ties -> first label in scan order
    return labels == best

"""Spanning-tree coverage tours with turn reduction.

For each region four spanning trees are built, each biased to join its
straight chains along one side of the region (top, bottom, right or left).
The tree is circumnavigated through the 2x2 sub-cells of its nodes and the
tour with the fewest turns is kept.

Sub-cell ``(u, v)`` belongs to node ``(u // 2, v // 2)``; its grid-frame
center is ``origin + ((u - 0.5) * d_s, (v - 0.5) * d_s)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .geo import GeoPoint, geo_to_ned_array, ned_to_geo_array
from .grid import NodeGrid

EPS = 1e-3
COORD_DECIMALS = 7


class Scheme(enum.IntEnum):
    UPPER = 0
    LOWER = 1
    RIGHT = 2
    LEFT = 3


@dataclass(frozen=True)
class SpanningTree:
    nodes: frozenset
    edges: tuple  # ((ix, iy), (jx, jy)) pairs with the smaller node first
    scheme: Scheme


@dataclass(frozen=True)
class SubcellTour:
    cells: tuple  # cyclic sequence of (u, v) sub-cells

    def __len__(self) -> int:
        return len(self.cells)


@dataclass(frozen=True, eq=False)
class CoveragePath:
    uav_id: int
    scheme: Scheme
    turns: int
    length: float  # meters
    node_count: int
    tour: SubcellTour
    waypoints_grid: np.ndarray  # (turns + 1, 2), closed
    waypoints_ned: np.ndarray  # (turns + 1, 2), closed
    waypoints_wgs84: tuple | None = None  # GeoPoints, closed

    def subcells(self) -> set:
        return set(self.tour.cells)


def _as_nodes(region) -> list:
    if isinstance(region, np.ndarray):
        return [tuple(map(int, c)) for c in np.argwhere(region)]
    return sorted({(int(a), int(b)) for a, b in region})


class _UnionFind:
    def __init__(self, items: Iterable):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _edge_weight(a, b, scheme: Scheme, bounds) -> float:
    x_min, x_max, y_min, y_max = bounds
    vertical = a[0] == b[0]
    if scheme in (Scheme.UPPER, Scheme.LOWER):
        if vertical:
            return 1.0
        row = a[1]
        return 2.0 + ((y_max - row) if scheme is Scheme.UPPER else (row - y_min)) * EPS
    if not vertical:
        return 1.0
    col = a[0]
    return 2.0 + ((x_max - col) if scheme is Scheme.RIGHT else (col - x_min)) * EPS


def build_mst(region, start_node=None, scheme: Scheme = Scheme.UPPER) -> SpanningTree:
    """Kruskal over the 4-adjacency of the region under the scheme's weights.

    ``start_node`` only has to belong to the region; the tree does not depend on it.
    """
    nodes = _as_nodes(region)
    node_set = frozenset(nodes)
    if not nodes:
        raise ValueError("empty region")
    if start_node is not None and tuple(start_node) not in node_set:
        raise ValueError(f"start node {start_node} is not in the region")
    xs = [n[0] for n in nodes]
    ys = [n[1] for n in nodes]
    bounds = (min(xs), max(xs), min(ys), max(ys))
    candidates = []
    for a in nodes:
        for b in ((a[0] + 1, a[1]), (a[0], a[1] + 1)):
            if b in node_set:
                candidates.append((a, b))
    order = sorted(
        range(len(candidates)),
        key=lambda k: (_edge_weight(*candidates[k], scheme, bounds), k),
    )
    uf = _UnionFind(nodes)
    edges = []
    for k in order:
        a, b = candidates[k]
        if uf.union(a, b):
            edges.append((a, b))
    if len(edges) != len(nodes) - 1:
        raise ValueError("region is not 4-connected; no spanning tree exists")
    return SpanningTree(node_set, tuple(edges), Scheme(scheme))


def _subcell_links(tree: SpanningTree) -> dict:
    """Each sub-cell mapped to its two tour neighbours."""
    links: dict = {}

    def link(p, q):
        links.setdefault(p, set()).add(q)
        links.setdefault(q, set()).add(p)

    def unlink(p, q):
        links[p].discard(q)
        links[q].discard(p)

    for ix, iy in tree.nodes:
        bl, br = (2 * ix, 2 * iy), (2 * ix + 1, 2 * iy)
        tl, tr = (2 * ix, 2 * iy + 1), (2 * ix + 1, 2 * iy + 1)
        link(bl, br)
        link(br, tr)
        link(tr, tl)
        link(tl, bl)
    for a, b in tree.edges:
        (ax, ay), (bx, by) = a, b
        if ay == by:  # b is east of a
            a_br, a_tr = (2 * ax + 1, 2 * ay), (2 * ax + 1, 2 * ay + 1)
            b_bl, b_tl = (2 * bx, 2 * by), (2 * bx, 2 * by + 1)
            unlink(a_br, a_tr)
            unlink(b_bl, b_tl)
            link(a_br, b_bl)
            link(a_tr, b_tl)
        else:  # b is north of a
            a_tl, a_tr = (2 * ax, 2 * ay + 1), (2 * ax + 1, 2 * ay + 1)
            b_bl, b_br = (2 * bx, 2 * by), (2 * bx + 1, 2 * by)
            unlink(a_tl, a_tr)
            unlink(b_bl, b_br)
            link(a_tl, b_bl)
            link(a_tr, b_br)
    return links


def _tree_on_right(p, q) -> bool:
    vx, vy = q[0] - p[0], q[1] - p[1]
    # offset from p to its node center, in sub-cell units
    cx = 0.5 if p[0] % 2 == 0 else -0.5
    cy = 0.5 if p[1] % 2 == 0 else -0.5
    return vx * cy - vy * cx < 0


def circumnavigate(tree: SpanningTree, start_subcell) -> SubcellTour:
    """Walk around the tree, keeping it on the right, from ``start_subcell``."""
    links = _subcell_links(tree)
    start = tuple(start_subcell)
    if start not in links:
        raise ValueError(f"sub-cell {start} does not belong to the tree")
    first = next(q for q in sorted(links[start]) if _tree_on_right(start, q))
    cells = [start]
    prev, cur = start, first
    while cur != start:
        cells.append(cur)
        a, b = links[cur]
        prev, cur = cur, (b if a == prev else a)
    if len(cells) != 4 * len(tree.nodes):
        raise AssertionError("circumnavigation did not visit every sub-cell once")
    return SubcellTour(tuple(cells))


def _directions(cells: Sequence) -> np.ndarray:
    arr = np.asarray(cells)
    return np.roll(arr, -1, axis=0) - arr


def turn_indices(tour: SubcellTour) -> np.ndarray:
    """Indices k where the heading into cell k differs from the heading out of it."""
    d = _directions(tour.cells)
    change = np.any(d != np.roll(d, 1, axis=0), axis=1)
    return np.flatnonzero(change)


def count_turns(tour: SubcellTour) -> int:
    return int(len(turn_indices(tour)))


def subcell_centers(grid: NodeGrid, cells) -> np.ndarray:
    uv = np.asarray(cells, dtype=float).reshape(-1, 2)
    return np.asarray(grid.origin) + (uv - 0.5) * grid.d_s


def _start_subcell(grid: NodeGrid, start_node, start_point) -> tuple:
    ix, iy = start_node
    cands = [(2 * ix + a, 2 * iy + b) for b in (0, 1) for a in (0, 1)]
    if start_point is None:
        return cands[0]
    p = grid.to_grid_frame(np.asarray(start_point, dtype=float).reshape(1, 2))[0]
    d2 = np.sum((subcell_centers(grid, cands) - p) ** 2, axis=1)
    return cands[int(np.argmin(d2))]


def export_wgs84(points_ned: np.ndarray, ref: GeoPoint) -> tuple[np.ndarray, np.ndarray]:
    """WGS84 coordinates as published (7 decimals) and the NED points they denote."""
    lat, lon = ned_to_geo_array(points_ned[:, 0], points_ned[:, 1], ref)
    lat = np.round(lat, COORD_DECIMALS)
    lon = np.round(lon, COORD_DECIMALS)
    x, y = geo_to_ned_array(lat, lon, ref)
    return np.stack([lat, lon], axis=1), np.stack([x, y], axis=1)


def plan_region_path(
    grid: NodeGrid,
    region,
    start_node,
    ref: GeoPoint | None = None,
    uav_id: int = 0,
    start_point=None,
) -> CoveragePath:
    """Fewest-turn tour over the four tree schemes, mapped back to NED/WGS84.

    With a reference point the NED waypoints are the ones denoted by the
    rounded WGS84 output, so re-reading exported paths reproduces them bit for bit.
    """
    nodes = _as_nodes(region)
    start_node = (int(start_node[0]), int(start_node[1]))
    start_sub = _start_subcell(grid, start_node, start_point)
    best = None
    for scheme in Scheme:
        tree = build_mst(nodes, start_node, scheme)
        tour = circumnavigate(tree, start_sub)
        turns = count_turns(tour)
        if best is None or turns < best[0]:
            best = (turns, scheme, tour)
    turns, scheme, tour = best

    idx = turn_indices(tour)
    # begin at the first turn point at or after the start sub-cell
    wp_cells = [tour.cells[k] for k in idx]
    wp_cells.append(wp_cells[0])
    wp_grid = subcell_centers(grid, wp_cells)
    wp_ned = grid.to_ned(wp_grid)
    wgs = None
    if ref is not None:
        latlon, wp_ned = export_wgs84(wp_ned, ref)
        wgs = tuple(GeoPoint(float(a), float(b)) for a, b in latlon)
    return CoveragePath(
        uav_id=uav_id,
        scheme=scheme,
        turns=turns,
        length=4 * len(nodes) * grid.d_s,
        node_count=len(nodes),
        tour=tour,
        waypoints_grid=wp_grid,
        waypoints_ned=wp_ned,
        waypoints_wgs84=wgs,
    )


def scheme_turns(region, start_node) -> dict:
    """Turn count of every scheme's tour, keyed by scheme."""
    nodes = _as_nodes(region)
    ix, iy = start_node
    out = {}
    for scheme in Scheme:
        tour = circumnavigate(build_mst(nodes, start_node, scheme), (2 * ix, 2 * iy))
        out[scheme] = count_turns(tour)
    return out

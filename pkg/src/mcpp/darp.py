"""Proportional area division of the free nodes among the UAVs.

UAV i owns the nodes where its evaluation field ``E_i = d_i + b_i`` is
lowest, ``d_i`` being the obstacle-aware BFS distance from its start node and
``b_i`` an additive offset. With all offsets zero this is a geodesic Voronoi
split, and additive offsets keep every region 4-connected. Offsets are not
tuned globally: the boundary is moved one node at a time, always from the
UAV most above its share to a neighbouring UAV below it, picking the boundary
node with the largest ``d_i - d_j`` (the node a growing offset would flip
first). A move is only taken if the donor region stays connected.

The division cost is ``0.5 * sum((k_i - p_i * L)**2)`` with ``k_i`` the
nodes owned by UAV i, ``p_i`` its share and ``L`` the free-node count; every
move strictly lowers it, so the loop terminates.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import FleetConfigurationError, InfeasiblePartitionError, InputDomainError
from .grid import NodeGrid, connected_components


@dataclass(frozen=True)
class DarpParams:
    max_cycles: int | None = None  # default 100 * (nx + ny) * n_uavs
    tolerance: int | None = None  # default max(1, ceil(0.005 * L))


class TraceRow(NamedTuple):
    cycle: int
    cost: float
    max_error: float
    disconnected: int


@dataclass(frozen=True, eq=False)
class RegionAssignment:
    owner: np.ndarray  # (nx, ny) UAV id per free node, -1 elsewhere
    counts: tuple
    starts: tuple
    shares: tuple
    iterations: int
    converged: bool
    cost: float
    tolerance: int
    trace: list = field(default_factory=list, repr=False)

    @property
    def n_uavs(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(sum(self.counts))

    def targets(self) -> np.ndarray:
        return np.asarray(self.shares) * self.total

    def errors(self) -> np.ndarray:
        return np.asarray(self.counts) - self.targets()

    def region(self, uav_id: int) -> np.ndarray:
        if not 0 <= uav_id < self.n_uavs:
            raise InputDomainError(f"unknown UAV id {uav_id}")
        return self.owner == uav_id

    def summary(self) -> dict:
        return {
            "counts": [int(k) for k in self.counts],
            "targets": [float(t) for t in self.targets()],
            "iterations": self.iterations,
            "converged": self.converged,
            "cost": self.cost,
            "tolerance": self.tolerance,
        }


def equal_shares(n: int) -> tuple:
    return tuple([1.0 / n] * n)


def validate_shares(shares: Sequence[float]) -> tuple:
    arr = np.asarray(shares, dtype=float)
    if arr.ndim != 1 or len(arr) == 0:
        raise FleetConfigurationError("shares must be a non-empty vector")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise FleetConfigurationError("every share must be positive")
    if abs(arr.sum() - 1.0) > 1e-6:
        raise FleetConfigurationError(f"shares must sum to 1, got {arr.sum():.6f}")
    return tuple(float(v) for v in arr)


def division_cost(counts, shares, total) -> float:
    """0.5 * sum((k_i - p_i L)^2)."""
    k = np.asarray(counts, dtype=float)
    return 0.5 * float(np.sum((k - np.asarray(shares) * total) ** 2))


def default_tolerance(total: int) -> int:
    return max(1, math.ceil(0.005 * total))


def bfs_distance(free: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """4-connected hop distance through ``free`` from any source node (inf if unreachable)."""
    dist = np.full(free.shape, np.inf)
    frontier = sources & free
    dist[frontier] = 0.0
    d = 0
    while frontier.any():
        d += 1
        nb = np.zeros_like(frontier)
        nb[1:, :] |= frontier[:-1, :]
        nb[:-1, :] |= frontier[1:, :]
        nb[:, 1:] |= frontier[:, :-1]
        nb[:, :-1] |= frontier[:, 1:]
        nb &= free & np.isinf(dist)
        dist[nb] = d
        frontier = nb
    return dist


def region_connected(assignment: RegionAssignment, uav_id: int) -> bool:
    """True iff the UAV's nodes form one 4-connected piece containing its start."""
    mask = assignment.region(uav_id)
    labels, n = connected_components(mask)
    start = assignment.starts[uav_id]
    return n == 1 and bool(mask[start])


def _stays_connected(region: np.ndarray, cell) -> bool:
    ix, iy = cell
    nx, ny = region.shape
    # only the 3x3 neighbourhood matters when it holds a single arc of region nodes
    x0, x1 = max(ix - 1, 0), min(ix + 2, nx)
    y0, y1 = max(iy - 1, 0), min(iy + 2, ny)
    local = region[x0:x1, y0:y1].copy()
    local[ix - x0, iy - y0] = False
    if connected_components(local)[1] <= 1:
        return True
    rest = region.copy()
    rest[cell] = False
    return connected_components(rest)[1] <= 1


def _boundary_with(owner: np.ndarray, i: int, j: int) -> np.ndarray:
    """Nodes of UAV i with a 4-neighbour owned by UAV j."""
    mine = owner == i
    theirs = owner == j
    touch = np.zeros_like(mine)
    touch[1:, :] |= theirs[:-1, :]
    touch[:-1, :] |= theirs[1:, :]
    touch[:, 1:] |= theirs[:, :-1]
    touch[:, :-1] |= theirs[:, 1:]
    return mine & touch


def _adjacent_pairs(owner: np.ndarray, n: int) -> set:
    pairs = set()
    for a, b in ((owner[1:, :], owner[:-1, :]), (owner[:, 1:], owner[:, :-1])):
        m = (a >= 0) & (b >= 0) & (a != b)
        for i, j in zip(a[m].tolist(), b[m].tolist()):
            pairs.add((i, j))
            pairs.add((j, i))
    return pairs


def divide(
    grid: NodeGrid,
    shares: Sequence[float] | None = None,
    params: DarpParams = DarpParams(),
    seed: int = 0,
) -> RegionAssignment:
    starts_by_id = grid.uav_starts()
    n = len(starts_by_id)
    if n == 0:
        raise FleetConfigurationError("grid carries no UAV nodes")
    if sorted(starts_by_id) != list(range(n)):
        raise FleetConfigurationError("UAV ids must be 0..n-1")
    shares = equal_shares(n) if shares is None else validate_shares(shares)
    if len(shares) != n:
        raise FleetConfigurationError(f"{len(shares)} shares given for {n} UAVs")
    starts = tuple(starts_by_id[i] for i in range(n))

    free = grid.free_mask
    total = int(free.sum())
    if total < n:
        raise InfeasiblePartitionError(f"{total} free nodes cannot host {n} UAVs")
    labels, _ = connected_components(free)
    start_label = labels[starts[0]]
    for i, s in enumerate(starts):
        if labels[s] != start_label:
            raise InfeasiblePartitionError(f"UAV {i} start is disconnected from UAV 0's free space")
    if np.count_nonzero(labels == start_label) != total:
        raise InfeasiblePartitionError("free space contains nodes unreachable from every UAV start")

    tol = params.tolerance if params.tolerance is not None else default_tolerance(total)
    nx, ny = free.shape
    max_cycles = params.max_cycles if params.max_cycles is not None else 100 * (nx + ny) * n
    rng = np.random.default_rng(seed)
    targets = np.asarray(shares) * total

    dist = np.stack([bfs_distance(free, _point_mask(free.shape, s)) for s in starts])
    gx, gy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    euclid = np.stack([np.hypot(gx - s[0], gy - s[1]) for s in starts])
    # seeded jitter only separates exact ties of the two geometric keys
    jitter = rng.uniform(0.0, 1e-6, size=(n,) + free.shape)

    owner = np.full(free.shape, -1, dtype=np.int64)
    owner[free] = np.argmin(dist[:, free], axis=0)  # ties -> lowest UAV id
    counts = np.bincount(owner[free], minlength=n)
    is_start = np.zeros(free.shape, dtype=bool)
    for s in starts:
        is_start[s] = True

    trace = [TraceRow(0, division_cost(counts, shares, total), float(np.abs(counts - targets).max()), 0)]
    cycle = 0
    pairs = _adjacent_pairs(owner, n)
    while cycle < max_cycles:
        err = counts - targets
        if np.all(np.abs(err) <= tol) and np.all(np.abs(err) < 1.0 + 1e-9):
            break
        ranked = sorted(
            ((err[i] - err[j], i, j) for i, j in pairs if err[i] - err[j] > 1.0 + 1e-9),
            key=lambda t: (-t[0], t[1], t[2]),
        )
        moved = False
        for _, i, j in ranked:
            cand = _boundary_with(owner, i, j) & ~is_start
            if not cand.any():
                continue
            xs, ys = np.nonzero(cand)
            key = (dist[i, xs, ys] - dist[j, xs, ys]) + 1e-3 * (
                euclid[i, xs, ys] - euclid[j, xs, ys]
            ) + jitter[i, xs, ys]
            region = owner == i
            for k in np.argsort(-key, kind="stable"):
                cell = (int(xs[k]), int(ys[k]))
                if _stays_connected(region, cell):
                    owner[cell] = j
                    counts[i] -= 1
                    counts[j] += 1
                    moved = True
                    break
            if moved:
                break
        if not moved:
            break
        cycle += 1
        pairs = _adjacent_pairs(owner, n)
        trace.append(
            TraceRow(cycle, division_cost(counts, shares, total), float(np.abs(counts - targets).max()), 0)
        )

    err = counts - targets
    return RegionAssignment(
        owner=owner,
        counts=tuple(int(k) for k in counts),
        starts=starts,
        shares=tuple(shares),
        iterations=cycle,
        converged=bool(np.all(np.abs(err) <= tol)),
        cost=division_cost(counts, shares, total),
        tolerance=tol,
        trace=trace,
    )


def _point_mask(shape, cell) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    m[cell] = True
    return m


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TraceRow._fields)
        w.writerows(trace)


def owner_raster(assignment: RegionAssignment) -> np.ndarray:
    """uint8 raster, north up: 0 for non-free nodes, evenly spread gray levels per UAV."""
    n = assignment.n_uavs
    levels = np.linspace(255.0 / (n + 1), 255.0, n).astype(np.uint8)
    out = np.zeros(assignment.owner.shape, dtype=np.uint8)
    mask = assignment.owner >= 0
    out[mask] = levels[assignment.owner[mask]]
    return out.T[::-1]

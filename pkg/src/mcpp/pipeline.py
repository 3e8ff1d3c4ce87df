"""End-to-end mission planning: ROI in WGS84 to per-UAV waypoint tours.

Stages run in a fixed order: local frame, lattice placement, node labeling,
area division, per-region tours, back-transform, coverage and cost reports.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import __version__
from .coverage import CoverageReport, SensorModel, simulate_coverage
from .cost import CostParams, MissionCostReport, flight_duration, total_time_and_cost
from .darp import RegionAssignment, divide, equal_shares, validate_shares
from .errors import FleetConfigurationError, InfeasiblePartitionError, InputDomainError
from .geo import GeoPoint, Polygon, geo_to_ned_array, polygon_area
from .grid import Mode, NodeGrid, largest_component
from .placement import ABLATIONS, PlacementParams, PlacementSolution, identity_solution, optimize_placement
from .stc import CoveragePath, plan_region_path

log = logging.getLogger(__name__)

DENSITY_TOL = 1e-6


@dataclass(frozen=True)
class MissionSpec:
    roi: tuple  # GeoPoint ring
    obstacles: tuple = ()  # GeoPoint rings
    n_uavs: int = 1
    positions: tuple | str = "auto"  # GeoPoints or "auto"
    shares: tuple | str = "equal"
    sensor: SensorModel | None = None
    d_s: float | None = None
    mode: Mode = Mode.STRICT
    speed: float = 3.0
    gimbal_pitch: float | None = None
    placement: PlacementParams = PlacementParams()
    cost: CostParams = CostParams()
    ablation: str = "full"
    coverage_cell: float | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "roi", tuple(GeoPoint(*p) for p in self.roi))
        object.__setattr__(self, "obstacles", tuple(tuple(GeoPoint(*p) for p in r) for r in self.obstacles))
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if len(self.roi) < 3:
            raise InputDomainError(f"ROI needs at least 3 vertices, got {len(self.roi)}")
        if not isinstance(self.n_uavs, (int, np.integer)) or self.n_uavs < 1:
            raise FleetConfigurationError(f"fleet size must be a positive integer, got {self.n_uavs}")
        if self.positions != "auto":
            pts = tuple(GeoPoint(*p) for p in self.positions)
            if len(pts) != self.n_uavs:
                raise FleetConfigurationError(f"{len(pts)} initial positions given for {self.n_uavs} UAVs")
            object.__setattr__(self, "positions", pts)
        if self.shares != "equal":
            sh = validate_shares(self.shares)
            if len(sh) != self.n_uavs:
                raise FleetConfigurationError(f"{len(sh)} shares given for {self.n_uavs} UAVs")
            object.__setattr__(self, "shares", sh)
        if self.ablation not in ABLATIONS:
            raise InputDomainError(f"unknown ablation {self.ablation!r}")
        if self.sensor is None and self.d_s is None:
            raise InputDomainError("either a sensor model or a scanning density is required")
        if self.sensor is not None and self.d_s is not None:
            if abs(self.sensor.d_s - self.d_s) > DENSITY_TOL:
                raise InputDomainError(
                    f"scanning density {self.d_s} disagrees with the sensor's {self.sensor.d_s:.6f}"
                )
        if self.d_s is not None and not (self.d_s > 0 and math.isfinite(self.d_s)):
            raise InputDomainError(f"scanning density must be positive, got {self.d_s}")
        if self.cost.speed != self.speed:
            object.__setattr__(self, "cost", replace(self.cost, speed=self.speed))

    @property
    def scanning_density(self) -> float:
        return self.d_s if self.d_s is not None else self.sensor.d_s

    @property
    def sensor_model(self) -> SensorModel:
        # a bare d_s implies the default camera flown at 50 % overlap
        return self.sensor if self.sensor is not None else SensorModel.for_density(self.d_s)

    def reference(self) -> GeoPoint:
        lat = np.array([p.lat for p in self.roi])
        lon = np.array([p.lon for p in self.roi])
        return GeoPoint(float(lat.mean()), float(lon.mean()))

    def local_roi(self) -> Polygon:
        ref = self.reference()
        return Polygon(_ring_to_ned(self.roi, ref), [_ring_to_ned(r, ref) for r in self.obstacles])


def _ring_to_ned(ring: Sequence[GeoPoint], ref: GeoPoint) -> np.ndarray:
    lat = np.array([p.lat for p in ring])
    lon = np.array([p.lon for p in ring])
    x, y = geo_to_ned_array(lat, lon, ref)
    return np.stack([x, y], axis=1)


@dataclass(frozen=True, eq=False)
class MissionPlan:
    spec: MissionSpec
    ref: GeoPoint
    roi: Polygon
    placement: PlacementSolution
    grid: NodeGrid
    assignment: RegionAssignment
    paths: tuple
    coverage: CoverageReport
    cost: MissionCostReport
    dropped_nodes: int = 0
    provenance: dict = field(default_factory=dict)

    def metrics(self) -> dict:
        """Everything that goes into metrics.json; contains no timings."""
        return {
            "placement": self.placement.summary(),
            "grid": {
                "dims": list(self.grid.dims),
                "nominal_dims": list(self.grid.nominal_dims),
                "free_nodes": self.grid.free_count,
                "dropped_nodes": self.dropped_nodes,
                "mode": self.grid.mode.value,
                "d_s": self.grid.d_s,
            },
            "assignment": self.assignment.summary(),
            "paths": [
                {"uav_id": p.uav_id, "turns": p.turns, "length_m": p.length, "scheme": p.scheme.name.lower(),
                 "nodes": p.node_count}
                for p in self.paths
            ],
            "coverage": self.coverage.summary(),
            "cost": self.cost.summary(),
            "operation": {"speed": self.spec.speed, "gimbal_pitch": self.spec.gimbal_pitch,
                          "altitude": self.spec.sensor_model.altitude,
                          "footprint": self.spec.sensor_model.footprint,
                          "gsd": self.spec.sensor_model.gsd},
            "provenance": self.provenance,
        }


def _seeds(seed: int) -> tuple[int, np.random.Generator, int]:
    ss = np.random.SeedSequence(seed)
    placement_ss, position_ss, darp_ss = ss.spawn(3)
    return (
        int(placement_ss.generate_state(1)[0]),
        np.random.default_rng(position_ss),
        int(darp_ss.generate_state(1)[0]),
    )


def _place(spec: MissionSpec, roi: Polygon, seed: int) -> PlacementSolution:
    d_s = spec.scanning_density
    if spec.ablation == "none":
        return identity_solution(roi, d_s, spec.mode, spec.placement)
    weights = {"j1": dict(a=1.0, b=0.0, c=0.0), "j1j2": dict(c=0.0)}.get(spec.ablation, {})
    params = replace(spec.placement, seed=seed, **weights)
    return optimize_placement(roi, d_s, spec.mode, params)


def _start_positions(spec: MissionSpec, grid: NodeGrid, ref: GeoPoint, rng) -> np.ndarray:
    if spec.positions == "auto":
        free = np.argwhere(grid.free_mask)
        if len(free) < spec.n_uavs:
            raise InfeasiblePartitionError(f"{len(free)} free nodes cannot host {spec.n_uavs} UAVs")
        pick = free[np.sort(rng.choice(len(free), size=spec.n_uavs, replace=False))]
        pick = pick[rng.permutation(len(pick))]
        return grid.to_ned(grid.node_center(pick[:, 0], pick[:, 1]))
    return _ring_to_ned(spec.positions, ref)


def plan_mission(spec: MissionSpec, threads: int = 1) -> MissionPlan:
    ref = spec.reference()
    roi = spec.local_roi()
    placement_seed, position_rng, darp_seed = _seeds(spec.seed)

    solution = _place(spec, roi, placement_seed)
    grid = solution.grid
    keep = largest_component(grid.free_mask)
    dropped = grid.free_count - int(keep.sum())
    if dropped:
        log.warning("dropping %d free nodes outside the largest connected piece", dropped)
        grid = grid.restricted_to(keep)

    starts_ned = _start_positions(spec, grid, ref, position_rng)
    grid = grid.with_uavs(starts_ned)
    shares = equal_shares(spec.n_uavs) if spec.shares == "equal" else spec.shares
    assignment = divide(grid, shares, seed=darp_seed)
    if not assignment.converged:
        log.warning("area division stopped at counts %s, off target", assignment.counts)

    def tour(uid: int) -> CoveragePath:
        return plan_region_path(
            grid, assignment.region(uid), assignment.starts[uid], ref, uav_id=uid, start_point=starts_ned[uid]
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            paths = tuple(pool.map(tour, range(spec.n_uavs)))
    else:
        paths = tuple(tour(u) for u in range(spec.n_uavs))

    sensor = spec.sensor_model
    coverage = simulate_coverage(paths, roi, sensor, spec.coverage_cell)
    durations = [flight_duration(p.length, p.turns, spec.cost) for p in paths]
    cost = total_time_and_cost(durations, spec.n_uavs, polygon_area(roi), spec.cost)
    provenance = {
        "seed": spec.seed,
        "version": __version__,
        "numpy": np.__version__,
        "reference": {"lat": ref.lat, "lon": ref.lon},
        "ablation": spec.ablation,
    }
    return MissionPlan(spec, ref, roi, solution, grid, assignment, paths, coverage, cost, dropped, provenance)


def evaluate_plan(paths, spec: MissionSpec, turns: int | None = None, length_m: float | None = None) -> CoverageReport:
    """Coverage report for stored paths (CoveragePath objects or NED arrays) over the spec's ROI."""
    return simulate_coverage(list(paths), spec.local_roi(), spec.sensor_model, spec.coverage_cell, turns, length_m)

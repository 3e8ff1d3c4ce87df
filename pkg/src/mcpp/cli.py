"""Command-line entry point: ``mcpp plan | evaluate | costmodel``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .coverage import heatmap_array, write_histogram_csv, write_pgm
from .cost import CostParams, batteries_needed, flight_duration, total_time_and_cost
from .darp import owner_raster, write_trace_csv as write_darp_trace
from .errors import (
    FleetConfigurationError,
    InfeasibleDiscretizationError,
    InfeasiblePartitionError,
    InputDomainError,
)
from .geo import bounding_box
from .io import load_mission, paths_geojson, read_paths_geojson, write_json
from .pipeline import evaluate_plan, plan_mission
from .placement import ABLATIONS, write_trace_csv as write_placement_trace

log = logging.getLogger("mcpp")

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_INFEASIBLE_DISCRETIZATION = 3
EXIT_INFEASIBLE_PARTITION = 4


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputDomainError(f"cannot create output directory: {exc}") from None
    return out


def cmd_plan(args) -> int:
    spec, warnings = load_mission(args.mission, seed=args.seed, mode=args.mode, ablation=args.ablation)
    for w in warnings:
        log.warning(w)
    out = _out_dir(args.out)
    t0 = time.perf_counter()
    plan = plan_mission(spec, threads=args.threads)
    log.info("planned %d paths in %.2f s", len(plan.paths), time.perf_counter() - t0)
    metrics = plan.metrics()
    metrics["warnings"] = warnings
    write_json(out / "paths.geojson", paths_geojson(plan))
    write_json(out / "metrics.json", metrics)
    write_pgm(out / "heatmap.pgm", heatmap_array(plan.coverage.raster))
    write_histogram_csv(out / "histogram.csv", plan.coverage.histogram)
    if args.debug:
        write_pgm(out / "grid.pgm", plan.grid.to_pgm_array())
        write_pgm(out / "regions.pgm", owner_raster(plan.assignment))
        write_placement_trace(out / "placement_trace.csv", plan.placement.trace)
        write_darp_trace(out / "darp_trace.csv", plan.assignment.trace)
    c = plan.coverage
    print(f"PoC {c.poc:.2f}%  PoOC {c.pooc:.2f}%  turns {c.turns}  length {c.length_km:.3f} km")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    spec, warnings = load_mission(args.mission, seed=args.seed)
    for w in warnings:
        log.warning(w)
    ref = spec.reference()
    arrays, totals = read_paths_geojson(args.paths, ref)
    roi = spec.local_roi()
    box = bounding_box(roi)
    margin = spec.sensor_model.footprint
    for pts in arrays:
        outside = (
            (pts[:, 0] < box.x_min - margin)
            | (pts[:, 0] > box.x_max + margin)
            | (pts[:, 1] < box.y_min - margin)
            | (pts[:, 1] > box.y_max + margin)
        )
        if outside.any():
            raise InputDomainError("paths do not belong to the mission's ROI")
    out = _out_dir(args.out)
    report = evaluate_plan(arrays, spec, totals.get("turns"), totals.get("length_m"))
    write_json(out / "metrics.json", {"coverage": report.summary(), "warnings": warnings})
    write_pgm(out / "heatmap.pgm", heatmap_array(report.raster))
    write_histogram_csv(out / "histogram.csv", report.histogram)
    print(f"PoC {report.poc:.2f}%  PoOC {report.pooc:.2f}%")
    return EXIT_OK


def cmd_costmodel(args) -> int:
    params = CostParams(speed=args.speed, endurance=args.endurance, c1=args.c1, c2=args.c2, fcm=args.fcm)
    if args.ft is not None:
        ft = args.ft
    elif args.length is not None:
        ft = flight_duration(args.length, args.turns, params)
    else:
        raise InputDomainError("give either --ft or --length")
    if ft < 0:
        raise InputDomainError("flight time must be non-negative")
    bats = args.bats if args.bats is not None else batteries_needed(ft, params.endurance)
    report = total_time_and_cost([ft], args.vn, args.area, params, batteries=bats)
    print(f"flight time       {report.flight_time:10.2f} min")
    print(f"batteries per UAV {bats:10d}")
    print(f"deployment time   {report.deployment_time:10.2f} min")
    print(f"battery delay     {report.battery_delay:10.2f} min")
    print(f"total time        {report.total_time:10.2f} min")
    print(f"flight cost       {report.flight_cost:10.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcpp", description="Multi-UAV coverage path planner")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mission", required=True, help="mission JSON file")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for per-UAV stages")

    p = sub.add_parser("plan", parents=[common], help="plan coverage paths")
    p.add_argument("--debug", action="store_true", help="also write grid.pgm, regions.pgm and traces")
    p.add_argument("--ablation", choices=ABLATIONS, default=None, help="placement objective variant")
    p.add_argument("--mode", choices=("strict", "better"), default=None, help="node labeling mode")
    p.set_defaults(func=cmd_plan)

    e = sub.add_parser("evaluate", parents=[common], help="coverage of stored paths")
    e.add_argument("--paths", required=True, help="paths GeoJSON (LineStrings, lon/lat)")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("costmodel", help="mission time and cost from flight time")
    c.add_argument("--ft", type=float, help="flight time in minutes")
    c.add_argument("--length", type=float, help="path length in meters (instead of --ft)")
    c.add_argument("--turns", type=int, default=0, help="turn count, used with --length")
    c.add_argument("--vn", type=int, required=True, help="number of UAVs")
    c.add_argument("--area", type=float, default=0.0, help="ROI area in square meters")
    c.add_argument("--bats", type=int, help="batteries per UAV (default: from flight time)")
    c.add_argument("--speed", type=float, default=3.0, help="m/s")
    c.add_argument("--endurance", type=float, default=25.0, help="minutes per battery")
    c.add_argument("--c1", type=float, default=6.0)
    c.add_argument("--c2", type=float, default=2.0)
    c.add_argument("--fcm", type=float, default=0.017228, help="cost per UAV-minute")
    c.set_defaults(func=cmd_costmodel)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except InfeasibleDiscretizationError as exc:
        log.error("infeasible discretization: %s", exc)
        return EXIT_INFEASIBLE_DISCRETIZATION
    except InfeasiblePartitionError as exc:
        log.error("infeasible partition: %s", exc)
        return EXIT_INFEASIBLE_PARTITION
    except (InputDomainError, FleetConfigurationError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())

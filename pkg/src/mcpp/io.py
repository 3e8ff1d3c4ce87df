"""Mission-file parsing and artifact writers.

Mission files are JSON. The ROI is given either inline as ``[lat, lon]``
pairs (with obstacles in the ``obstacles`` list) or as a GeoJSON Polygon /
Feature whose rings are ``[lon, lat]`` and whose inner rings are obstacles.
"""
from __future__ import annotations

import json
import logging
from dataclasses import fields
from pathlib import Path

import jsonschema
import numpy as np

from .coverage import SensorModel
from .cost import CostParams
from .errors import InputDomainError
from .geo import GeoPoint, geo_to_ned_array
from .placement import PlacementParams
from .pipeline import MissionPlan, MissionSpec

log = logging.getLogger(__name__)

_LATLON = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3}
_RING = {"type": "array", "items": _LATLON}
_GEOJSON_POLYGON = {
    "type": "object",
    "required": ["type", "coordinates"],
    "properties": {"type": {"const": "Polygon"}, "coordinates": {"type": "array", "minItems": 1, "items": _RING}},
}
_GEOJSON_FEATURE = {
    "type": "object",
    "required": ["type", "geometry"],
    "properties": {"type": {"const": "Feature"}, "geometry": _GEOJSON_POLYGON},
}
_NUMBER_MAP = {"type": "object", "additionalProperties": {"type": "number"}}

MISSION_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["roi"],
    "properties": {
        "roi": {"oneOf": [_RING, _GEOJSON_POLYGON, _GEOJSON_FEATURE]},
        "obstacles": {"type": "array", "items": _RING},
        "n_uavs": {"type": "integer", "minimum": 1},
        "initial_positions": {"oneOf": [{"const": "auto"}, {"type": "array", "items": _LATLON}]},
        "shares": {"oneOf": [{"const": "equal"}, {"type": "array", "items": {"type": "number"}}]},
        "sensor": {
            "type": "object",
            "required": ["altitude"],
            "properties": {
                "altitude": {"type": "number"},
                "hfov": {"type": "number"},
                "hres": {"type": "integer"},
                "overlap": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "d_s": {"type": "number"},
        "mode": {"type": "string"},
        "speed": {"type": "number"},
        "gimbal_pitch": {"type": "number"},
        "placement": _NUMBER_MAP,
        "cost": _NUMBER_MAP,
        "ablation": {"enum": ["none", "j1", "j1j2", "full"]},
        "coverage_cell": {"type": "number"},
    },
}

KNOWN_FIELDS = frozenset(MISSION_SCHEMA["properties"])


def _rings_from_roi(value) -> tuple[list, list]:
    """Outer ring and obstacle rings as (lat, lon) lists."""
    if isinstance(value, dict):
        geom = value["geometry"] if value.get("type") == "Feature" else value
        rings = [[(p[1], p[0]) for p in ring] for ring in geom["coordinates"]]
        return rings[0], rings[1:]
    return [(p[0], p[1]) for p in value], []


def _subset(cls, values: dict, section: str, skip=()):
    names = {f.name for f in fields(cls)} - set(skip)
    unknown = sorted(set(values) - names)
    if unknown:
        raise InputDomainError(f"unknown {section} parameters: {', '.join(unknown)}")
    return cls(**values)


def spec_from_dict(doc: dict, seed: int = 0, mode=None, ablation=None) -> tuple[MissionSpec, list]:
    """Validate a mission document; returns the spec and a list of warnings."""
    try:
        jsonschema.validate(doc, MISSION_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputDomainError(f"mission file invalid at {path}: {exc.message}") from None
    warnings = [f"ignored unknown field {k!r}" for k in sorted(set(doc) - KNOWN_FIELDS)]
    outer, holes = _rings_from_roi(doc["roi"])
    holes += [[(p[0], p[1]) for p in ring] for ring in doc.get("obstacles", [])]
    positions = doc.get("initial_positions", "auto")
    if positions != "auto":
        positions = tuple((p[0], p[1]) for p in positions)
    shares = doc.get("shares", "equal")
    if shares != "equal":
        shares = tuple(shares)
    sensor = doc.get("sensor")
    if sensor is not None:
        sensor = SensorModel(**sensor)
    spec = MissionSpec(
        roi=tuple(outer),
        obstacles=tuple(tuple(h) for h in holes),
        n_uavs=doc.get("n_uavs", 1),
        positions=positions,
        shares=shares,
        sensor=sensor,
        d_s=doc.get("d_s"),
        mode=mode if mode is not None else doc.get("mode", "strict"),
        speed=doc.get("speed", 3.0),
        gimbal_pitch=doc.get("gimbal_pitch"),
        placement=_subset(PlacementParams, doc.get("placement", {}), "placement", skip=("seed",)),
        cost=_subset(CostParams, doc.get("cost", {}), "cost", skip=("speed",)),
        ablation=ablation if ablation is not None else doc.get("ablation", "full"),
        coverage_cell=doc.get("coverage_cell"),
        seed=seed,
    )
    return spec, warnings


def load_mission(path, seed: int = 0, mode=None, ablation=None) -> tuple[MissionSpec, list]:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputDomainError(f"cannot read mission file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputDomainError(f"mission file is not valid JSON: {exc}") from None
    return spec_from_dict(doc, seed, mode, ablation)


def paths_geojson(plan: MissionPlan) -> dict:
    features = []
    for p in plan.paths:
        features.append(
            {
                "type": "Feature",
                "properties": {
                    "uav_id": p.uav_id,
                    "turns": p.turns,
                    "length_m": p.length,
                    "scheme": p.scheme.name.lower(),
                },
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[g.lon, g.lat] for g in p.waypoints_wgs84],
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def read_paths_geojson(path, ref: GeoPoint) -> tuple[list, dict]:
    """NED waypoint arrays per LineString, plus turn/length totals when every feature states them."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputDomainError(f"cannot read paths file: {exc}") from None
    feats = doc.get("features") if isinstance(doc, dict) else None
    if feats is None:
        raise InputDomainError("paths file must be a GeoJSON FeatureCollection")
    arrays, turns, lengths = [], [], []
    for f in feats:
        geom = f.get("geometry") or {}
        if geom.get("type") != "LineString":
            raise InputDomainError("every path feature must be a LineString")
        coords = np.asarray(geom.get("coordinates"), dtype=float)
        if coords.ndim != 2 or coords.shape[0] < 1 or coords.shape[1] < 2:
            raise InputDomainError("LineString coordinates must be [lon, lat] pairs")
        x, y = geo_to_ned_array(coords[:, 1], coords[:, 0], ref)
        arrays.append(np.stack([x, y], axis=1))
        props = f.get("properties") or {}
        turns.append(props.get("turns"))
        lengths.append(props.get("length_m"))
    totals = {}
    if turns and all(t is not None for t in turns):
        totals["turns"] = int(sum(turns))
    if lengths and all(v is not None for v in lengths):
        totals["length_m"] = float(sum(lengths))
    return arrays, totals


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")

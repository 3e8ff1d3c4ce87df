"""Simulated-annealing search for the lattice placement (sx, sy, theta).

The score of a placement is ``J = a*J1 + b*J2 - c*J3`` where J1 rewards free
nodes, J2 rewards a tight augmented box and J3 penalizes uneven margins
between the polygon's box and the augmented box.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleDiscretizationError, InputDomainError
from .geo import NedPoint, Polygon, polygon_area, transform_polygon
from .grid import (
    IDENTITY,
    AugmentedBox,
    Mode,
    NodeGrid,
    Placement,
    augmented_box,
    build_grid,
    default_pivot,
    label_free,
    node_spacing,
)

ABLATIONS = ("none", "j1", "j1j2", "full")


@dataclass(frozen=True)
class PlacementParams:
    a: float = 0.9
    b: float = 0.1
    c: float = 0.05
    t0: float = 0.1
    alpha: float = 0.95
    iters_per_temp: int = 30
    t_min: float = 1e-4
    max_evals: int = 10_000
    seed: int = 0

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InputDomainError(f"weight {name} must lie in [0, 1], got {v}")
        if abs(self.a + self.b - 1.0) > 1e-12:
            raise InputDomainError(f"weights must satisfy a + b = 1, got {self.a + self.b}")
        if not 0.0 < self.alpha < 1.0:
            raise InputDomainError("cooling factor must lie in (0, 1)")
        if not self.t0 > 0 or not self.t_min > 0:
            raise InputDomainError("temperatures must be positive")
        if self.iters_per_temp < 1 or self.max_evals < 1:
            raise InputDomainError("iteration counts must be positive")

    @classmethod
    def for_ablation(cls, name: str, **overrides) -> "PlacementParams":
        """Weights for the ablation variants; "none" keeps the defaults
        (the caller skips optimization entirely)."""
        if name not in ABLATIONS:
            raise InputDomainError(f"unknown ablation {name!r}, expected one of {ABLATIONS}")
        weights = {"j1": dict(a=1.0, b=0.0, c=0.0), "j1j2": dict(c=0.0)}.get(name, {})
        return cls(**{**weights, **overrides})


class IndexTerms(NamedTuple):
    j: float
    j1: float
    j2: float
    j3: float


def margin_term(standard, augmented) -> float:
    """Normalized absolute difference of opposite margins, summed over both axes."""
    jx = abs(abs(augmented.x_max - standard.x_max) - abs(standard.x_min - augmented.x_min)) / (
        2.0 * abs(augmented.x_max - augmented.x_min)
    )
    jy = abs(abs(augmented.y_max - standard.y_max) - abs(standard.y_min - augmented.y_min)) / (
        2.0 * abs(augmented.y_max - augmented.y_min)
    )
    return jx + jy


def _terms(
    free_count: int, area: float, d_n: float, abox: AugmentedBox, params: PlacementParams
) -> IndexTerms:
    # Not clamped: on thin ROIs s * d_n^2 can exceed A_p, and a clamp at 1
    # would hide every further node gained there.
    j1 = free_count * d_n * d_n / area
    j2 = area / abox.box.area
    j3 = margin_term(abox.standard, abox.box)
    j = params.a * j1 + params.b * j2 - params.c * j3
    return IndexTerms(j, j1, j2, j3)


def eval_index(
    roi: Polygon,
    placement,
    d_s: float,
    mode: Mode | str = Mode.STRICT,
    params: PlacementParams = PlacementParams(),
    pivot: NedPoint | None = None,
) -> IndexTerms:
    mode = Mode.parse(mode)
    d_n = node_spacing(d_s)
    if pivot is None:
        pivot = default_pivot(roi)
    tpoly = transform_polygon(roi, *placement, pivot=pivot, d_n=d_n)
    abox = augmented_box(tpoly, d_n)
    s = int(np.count_nonzero(label_free(tpoly, abox, d_s, mode)))
    return _terms(s, polygon_area(roi), d_n, abox, params)


class TraceRow(NamedTuple):
    evaluation: int
    sx: float
    sy: float
    theta: float
    j1: float
    j2: float
    j3: float
    j: float
    accepted: bool


@dataclass(frozen=True, eq=False)
class PlacementSolution:
    placement: Placement
    terms: IndexTerms
    grid: NodeGrid
    evaluations: int
    trace: list = field(default_factory=list, repr=False)

    @property
    def sx(self) -> float:
        return self.placement.sx

    @property
    def sy(self) -> float:
        return self.placement.sy

    @property
    def theta(self) -> float:
        return self.placement.theta

    def summary(self) -> dict:
        return {
            "sx": self.sx,
            "sy": self.sy,
            "theta": self.theta,
            "J": self.terms.j,
            "J1": self.terms.j1,
            "J2": self.terms.j2,
            "J3": self.terms.j3,
            "evaluations": self.evaluations,
            "free_nodes": self.grid.free_count,
        }


def _reflect(x: float, hi: float) -> float:
    period = 2.0 * hi
    y = math.fmod(x, period)
    if y < 0:
        y += period
    return period - y if y > hi else y


def optimize_placement(
    roi: Polygon,
    d_s: float,
    mode: Mode | str = Mode.STRICT,
    params: PlacementParams = PlacementParams(),
    pivot: NedPoint | None = None,
) -> PlacementSolution:
    """Anneal over (sx, sy, theta) and return the best placement seen.

    The identity placement is always the first state evaluated, so the result
    never scores below it.
    """
    mode = Mode.parse(mode)
    d_n = node_spacing(d_s)
    if pivot is None:
        pivot = default_pivot(roi)
    area = polygon_area(roi)
    spans = (d_n, d_n, 90.0)
    rng = np.random.default_rng(params.seed)

    def evaluate(pl: Placement) -> IndexTerms:
        tpoly = transform_polygon(roi, *pl, pivot=pivot, d_n=d_n)
        abox = augmented_box(tpoly, d_n)
        s = int(np.count_nonzero(label_free(tpoly, abox, d_s, mode)))
        return _terms(s, area, d_n, abox, params)

    current = IDENTITY
    cur_terms = evaluate(current)
    best, best_terms = current, cur_terms
    evals = 1
    trace = [TraceRow(1, *current, cur_terms.j1, cur_terms.j2, cur_terms.j3, cur_terms.j, True)]

    temp = params.t0
    while temp >= params.t_min and evals < params.max_evals:
        for _ in range(params.iters_per_temp):
            if evals >= params.max_evals:
                break
            var = int(rng.integers(3))
            step = rng.uniform(-1.0, 1.0) * spans[var] * temp / params.t0
            values = list(current)
            values[var] = _reflect(values[var] + step, spans[var])
            cand = Placement(*values)
            terms = evaluate(cand)
            evals += 1
            delta = terms.j - cur_terms.j
            u = rng.random()
            accepted = delta >= 0 or u < math.exp(delta / temp)
            if accepted:
                current, cur_terms = cand, terms
            if terms.j > best_terms.j:
                best, best_terms = cand, terms
            trace.append(TraceRow(evals, *cand, terms.j1, terms.j2, terms.j3, terms.j, accepted))
        temp *= params.alpha

    try:
        grid = build_grid(roi, best, d_s, mode, pivot=pivot)
    except InfeasibleDiscretizationError:
        raise InfeasibleDiscretizationError(
            f"no placement leaves a free node inside the ROI at d_s={d_s} "
            f"(best J={best_terms.j:.4f} after {evals} evaluations)"
        ) from None
    return PlacementSolution(best, best_terms, grid, evals, trace)


def identity_solution(
    roi: Polygon,
    d_s: float,
    mode: Mode | str = Mode.STRICT,
    params: PlacementParams = PlacementParams(),
    pivot: NedPoint | None = None,
) -> PlacementSolution:
    """Non-optimized placement, as used by the "none" ablation."""
    if pivot is None:
        pivot = default_pivot(roi)
    terms = eval_index(roi, IDENTITY, d_s, mode, params, pivot)
    grid = build_grid(roi, IDENTITY, d_s, mode, pivot=pivot)
    return PlacementSolution(IDENTITY, terms, grid, 1, [])


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TraceRow._fields)
        for row in trace:
            w.writerow([*row[:-1], int(row.accepted)])

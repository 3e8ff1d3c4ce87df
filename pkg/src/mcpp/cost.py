"""Closed-form mission time, battery count and flight cost.

All durations are in minutes. Per-turn delay uses a saturating function of
speed, ``c1 * speed / (c2 + |speed|)`` seconds per turn.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import InputDomainError

BASE_DEPLOYMENT_MIN = 5.0
PER_UAV_MIN = 3.0  # deployment per UAV, and the battery swap delay


@dataclass(frozen=True)
class CostParams:
    speed: float = 3.0  # m/s
    endurance: float = 25.0  # minutes per battery
    c1: float = 6.0
    c2: float = 2.0
    fcm: float = 0.017228  # currency per UAV-minute

    def __post_init__(self):
        if not self.speed > 0:
            raise InputDomainError(f"speed must be positive, got {self.speed}")
        if not self.endurance > 0:
            raise InputDomainError(f"battery endurance must be positive, got {self.endurance}")
        if not self.c2 + abs(self.speed) > 0:
            raise InputDomainError("c2 + |speed| must be positive")
        if self.fcm < 0:
            raise InputDomainError(f"cost rate must be non-negative, got {self.fcm}")


def turn_delay_s(params: CostParams) -> float:
    return params.c1 * params.speed / (params.c2 + abs(params.speed))


def flight_duration(length_m: float, turns: int, params: CostParams = CostParams()) -> float:
    if length_m < 0 or turns < 0:
        raise InputDomainError("length and turns must be non-negative")
    seconds = length_m / params.speed + turns * turn_delay_s(params)
    return seconds / 60.0


def batteries_needed(duration_min: float, endurance: float = 25.0) -> int:
    if duration_min < 0:
        raise InputDomainError("duration must be non-negative")
    # guard against 25.000000000000004 from upstream arithmetic
    return max(1, math.ceil(round(duration_min / endurance, 9)))


def deployment_time(v_n: int) -> float:
    if v_n < 0:
        raise InputDomainError("fleet size must be non-negative")
    return BASE_DEPLOYMENT_MIN + PER_UAV_MIN * v_n


def change_battery_delay(batteries: int, area_m2: float, speed: float, v_n: int) -> float:
    if batteries < 1:
        raise InputDomainError("at least one battery is needed")
    if area_m2 < 0 or not speed > 0:
        raise InputDomainError("area must be non-negative and speed positive")
    return (batteries - 1) * (2.0 * math.sqrt(area_m2) / (3.0 * speed * 60.0) + PER_UAV_MIN * v_n)


@dataclass(frozen=True)
class MissionCostReport:
    durations: tuple  # minutes per UAV
    batteries: tuple  # per UAV
    flight_time: float
    deployment_time: float
    battery_delay: float
    total_time: float
    flight_cost: float

    def summary(self) -> dict:
        return {
            "durations_min": list(self.durations),
            "batteries": list(self.batteries),
            "flight_time_min": self.flight_time,
            "deployment_time_min": self.deployment_time,
            "change_battery_delay_min": self.battery_delay,
            "total_time_min": self.total_time,
            "flight_cost": self.flight_cost,
        }


def total_time_and_cost(
    durations: Sequence[float],
    v_n: int,
    area_m2: float,
    params: CostParams = CostParams(),
    batteries: int | None = None,
) -> MissionCostReport:
    """Fleet report from per-UAV flight durations.

    The battery count that drives the swap delay is the largest per-UAV
    count, unless ``batteries`` overrides it.
    """
    durations = tuple(float(d) for d in durations)
    if not durations:
        raise InputDomainError("at least one UAV duration is required")
    if v_n < 1:
        raise InputDomainError(f"fleet size must be at least 1, got {v_n}")
    per_uav = tuple(batteries_needed(d, params.endurance) for d in durations)
    bats = max(per_uav) if batteries is None else int(batteries)
    ft = max(durations)
    dt = deployment_time(v_n)
    cbd = change_battery_delay(bats, area_m2, params.speed, v_n)
    total = ft + dt + cbd
    cost = (total - dt - (bats - 1) * PER_UAV_MIN) * v_n * params.fcm
    return MissionCostReport(durations, per_uav, ft, dt, cbd, total, cost)

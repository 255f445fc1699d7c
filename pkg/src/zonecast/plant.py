"""Thermodynamic HVAC plant: cooling demand/supply balance, chiller and fan
power, and an explicit-Euler RC zone model.

All quantities are SI: temperatures degC, mass flow kg/s, power kW, specific
heat kJ/(kg K). The air-side demand and the water-side supply close through
Q_demand = Q_supply, which pins the supply water temperature and hence the
chiller power for a given COP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np


class CopMode(Enum):
    CONSTANT = "constant"
    LINEAR = "linear"


@dataclass(frozen=True)
class PlantParams:
    """Plant constants. Specific heats default to standard dry air / liquid
    water values; the fan coefficient realizes the linear power-vs-pressure
    relation P = k * dp."""

    cp_air: float = 1.006  # kJ/(kg K)
    cp_water: float = 4.186  # kJ/(kg K)
    fan_coeff_kw_per_pa: float = 0.04
    cop_mode: CopMode = CopMode.CONSTANT
    cop_a: float = 4.0
    cop_b: float = 0.0
    t_ref_c: float = 20.0
    cop_min: float = 2.0
    cop_max: float = 7.0
    m_dot_water: float = 2.0  # kg/s

    def __post_init__(self):
        if self.cp_air <= 0 or self.cp_water <= 0:
            raise ValueError("specific heats must be positive")
        if self.fan_coeff_kw_per_pa <= 0:
            raise ValueError("fan coefficient must be positive")
        if not self.cop_min <= self.cop_max:
            raise ValueError("COP bounds out of order")


@dataclass
class ZoneThermo:
    """Instantaneous zone state entering the demand sum."""

    m_dot_air: float  # kg/s
    t_zone_c: float
    t_setpoint_c: float


@dataclass(frozen=True)
class RcZoneParams:
    """Lumped single-node RC zone: capacitance C, conductance UA."""

    capacitance_kj_per_k: float
    conductance_kw_per_k: float
    internal_gain_schedule: Sequence[float] = (0.0,)  # kW, cycled per step
    noise_std_c: float = 0.0

    def __post_init__(self):
        if self.capacitance_kj_per_k <= 0:
            raise ValueError("capacitance must be positive")
        if self.conductance_kw_per_k < 0:
            raise ValueError("conductance must be non-negative")

    def gain_at(self, step_index: int) -> float:
        sched = self.internal_gain_schedule
        return float(sched[step_index % len(sched)])


def cooling_demand(zones: Sequence[ZoneThermo], p: PlantParams) -> float:
    """Sum of m_dot * cp_air * (T_zone - T_setpoint) over zones, in kW.

    Negative values mean net heating demand; callers clamp to >= 0 before the
    chiller closure."""
    zones = list(zones)
    if not zones:
        raise ValueError("no zones")
    total = 0.0
    for z in zones:
        if z.m_dot_air < 0:
            raise ValueError(f"negative air mass flow {z.m_dot_air}")
        total += z.m_dot_air * p.cp_air * (z.t_zone_c - z.t_setpoint_c)
    return total


def cooling_supply(t_return_c: float, t_supply_c: float, p: PlantParams) -> float:
    """m_dot_water * cp_water * (T_return - T_supply), in kW."""
    return p.m_dot_water * p.cp_water * (t_return_c - t_supply_c)


def supply_temp_from_balance(q_demand_kw: float, t_return_c: float, p: PlantParams) -> float:
    """Supply water temperature that makes cooling_supply meet q_demand."""
    if q_demand_kw < 0:
        raise ValueError("demand must be non-negative at the chiller closure")
    if p.m_dot_water <= 0:
        raise ValueError("water mass flow must be positive")
    return t_return_c - q_demand_kw / (p.m_dot_water * p.cp_water)


def chiller_power(q_supply_kw: float, cop_value: float) -> float:
    if cop_value <= 0:
        raise ValueError("COP must be positive")
    return q_supply_kw / cop_value


def cop(outside_t_c: float, p: PlantParams) -> float:
    """Chiller COP: fixed, or linear in outdoor temperature with clamping."""
    if p.cop_mode is CopMode.CONSTANT:
        return p.cop_a
    raw = p.cop_a - p.cop_b * (outside_t_c - p.t_ref_c)
    return min(max(raw, p.cop_min), p.cop_max)


def ahu_fan_power(delta_p_pa: float, p: PlantParams) -> float:
    if delta_p_pa < 0:
        raise ValueError("pressure differential must be non-negative")
    return p.fan_coeff_kw_per_pa * delta_p_pa


def rc_step(
    t_zone_c: float,
    t_out_c: float,
    q_hvac_kw: float,
    q_internal_kw: float,
    dt_s: float,
    rc: RcZoneParams,
) -> float:
    """One explicit-Euler step: T' = T + (dt/C) (UA (T_out - T) + q_int + q_hvac).

    Cooling enters as negative q_hvac. The stability bound dt UA / C < 1 is
    enforced; every supported step (300/900/3600 s) satisfies it for sane
    parameters."""
    if dt_s <= 0:
        raise ValueError("dt must be positive")
    ua, c = rc.conductance_kw_per_k, rc.capacitance_kj_per_k
    if ua > 0 and dt_s * ua / c >= 1.0:
        raise ValueError(
            f"explicit Euler unstable: dt {dt_s}s >= C/UA = {c / ua:.1f}s; use a smaller step"
        )
    return t_zone_c + (dt_s / c) * (ua * (t_out_c - t_zone_c) + q_internal_kw + q_hvac_kw)

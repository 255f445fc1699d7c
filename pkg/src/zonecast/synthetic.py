"""Synthetic smart-building telemetry for desk-scale validation.

Simulates a small VAV building on RC zone dynamics: sinusoidal
seasonal/daily weather with AR(1) noise, weekday occupancy schedules driving
internal gains and setpoints, a proportional VAV flow controller plus reheat
thermostat per zone, and a single AHU. Emits the exact telemetry and
device-metadata CSV schemas the ingest module consumes, so the whole pipeline
runs end-to-end on generated data. Byte-identical output under a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .plant import RcZoneParams, rc_step
from .rng import Xorshift64Star
from .series import celsius_to_fahrenheit, fahrenheit_to_celsius, format_rfc3339, parse_rfc3339

CP_AIR = 1.006  # kJ/(kg K)


@dataclass
class SyntheticConfig:
    n_zones: int = 3
    months: int = 8
    step_seconds: int = 300
    start: str = "2022-01-01T00:00:00Z"
    seed: int = 0
    # weather (degC)
    weather_mean_c: float = 15.0
    weather_seasonal_amp_c: float = 14.0
    weather_daily_amp_c: float = 4.0
    weather_ar: float = 0.98
    weather_innovation_std_c: float = 0.25
    # setpoints (degF)
    occupied_cool_f: float = 72.0
    occupied_heat_f: float = 68.0
    unoccupied_cool_f: float = 75.0
    unoccupied_heat_f: float = 66.0
    supply_air_temp_f: float = 55.0
    supply_water_temp_f: float = 44.0
    # AHU pressure setpoint model (Pa)
    pressure_base_pa: float = 250.0
    pressure_span_pa: float = 150.0
    # measurement noise
    zone_temp_noise_f: float = 0.4
    outside_temp_noise_f: float = 0.3
    flow_noise_kg_s: float = 0.01
    # zone physics ranges; each zone draws inside these
    capacitance_range_kj_per_k: tuple = (6000.0, 10000.0)
    conductance_range_kw_per_k: tuple = (0.22, 0.34)
    occupied_gain_range_kw: tuple = (1.2, 2.2)
    base_gain_kw: float = 0.3
    process_noise_c: float = 0.02
    flow_min_kg_s: float = 0.15
    flow_max_kg_s: float = 2.0
    flow_kp_kg_s_per_k: float = 0.8
    reheat_max_kw: float = 15.0
    reheat_kp_kw_per_k: float = 12.0

    def __post_init__(self):
        if self.months < 1:
            raise ValueError("months must be >= 1")
        if self.n_zones < 1:
            raise ValueError("n_zones must be >= 1")


@dataclass
class _Zone:
    zone_id: str
    device_id: str
    rc: RcZoneParams
    occupied_gain_kw: float
    t_zone_c: float


def _month_add(dt: datetime, months: int) -> datetime:
    year = dt.year + (dt.month - 1 + months) // 12
    month = (dt.month - 1 + months) % 12 + 1
    return dt.replace(year=year, month=month)


def _occupied(ts: int) -> bool:
    days = ts // 86400
    weekday = (days + 3) % 7  # epoch day 0 was a Thursday
    hour = ts // 3600 % 24
    return weekday < 5 and 8 <= hour < 18


TELEMETRY_FILE = "telemetry.csv"
DEVICE_META_FILE = "device_meta.csv"


def zone_physical_params(cfg: SyntheticConfig, index: int) -> tuple[RcZoneParams, float]:
    """(RC params, occupied internal gain) for zone ``index``; stable per seed."""
    zrng = Xorshift64Star(cfg.seed).derive(f"zone-{index}/params")
    lo, hi = cfg.capacitance_range_kj_per_k
    c = lo + (hi - lo) * zrng.random()
    lo, hi = cfg.conductance_range_kw_per_k
    ua = lo + (hi - lo) * zrng.random()
    lo, hi = cfg.occupied_gain_range_kw
    gain = lo + (hi - lo) * zrng.random()
    rc = RcZoneParams(
        capacitance_kj_per_k=c, conductance_kw_per_k=ua, noise_std_c=cfg.process_noise_c
    )
    return rc, gain


def deterministic_outside_temp_c(cfg: SyntheticConfig, ts: int) -> float:
    """Weather model without its noise term: seasonal + daily swing at ``ts``."""
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    day_frac = dt.timetuple().tm_yday - 1 + (ts % 86400) / 86400.0
    hour_frac = ts % 86400 / 3600.0
    seasonal = -cfg.weather_seasonal_amp_c * math.cos(2 * math.pi * (day_frac - 10.0) / 365.25)
    daily = cfg.weather_daily_amp_c * math.sin(2 * math.pi * (hour_frac - 9.0) / 24.0)
    return cfg.weather_mean_c + seasonal + daily


def generate_synthetic(out_dir, cfg: SyntheticConfig) -> dict:
    """Write telemetry.csv and device_meta.csv; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start_epoch = parse_rfc3339(cfg.start)
    start_dt = datetime.fromtimestamp(start_epoch, tz=timezone.utc)
    end_epoch = int(_month_add(start_dt, cfg.months).timestamp())
    n_steps = (end_epoch - start_epoch) // cfg.step_seconds

    rng = Xorshift64Star(cfg.seed)
    zones = []
    for i in range(cfg.n_zones):
        rc, gain = zone_physical_params(cfg, i)
        zones.append(
            _Zone(
                zone_id=f"zone_{i + 1:02d}",
                device_id=f"vav_{i + 1:02d}",
                rc=rc,
                occupied_gain_kw=gain,
                t_zone_c=21.0,
            )
        )
    process_rngs = [rng.derive(f"zone-{i}/process") for i in range(cfg.n_zones)]
    meas_rngs = [rng.derive(f"zone-{i}/meas") for i in range(cfg.n_zones)]
    flow_rngs = [rng.derive(f"zone-{i}/flow") for i in range(cfg.n_zones)]
    weather_rng = rng.derive("weather")
    weather_meas_rng = rng.derive("weather/meas")

    t_supply_c = fahrenheit_to_celsius(cfg.supply_air_temp_f)

    lines = ["timestamp,device_id,measurement,value"]
    append = lines.append
    weather_noise = 0.0
    total_flow_max = cfg.n_zones * cfg.flow_max_kg_s

    for k in range(n_steps):
        ts = start_epoch + k * cfg.step_seconds
        stamp = format_rfc3339(ts)
        weather_noise = cfg.weather_ar * weather_noise + weather_rng.normal(
            0.0, cfg.weather_innovation_std_c
        )
        t_out_c = deterministic_outside_temp_c(cfg, ts) + weather_noise

        occ = _occupied(ts)
        cool_f = cfg.occupied_cool_f if occ else cfg.unoccupied_cool_f
        heat_f = cfg.occupied_heat_f if occ else cfg.unoccupied_heat_f
        cool_c = fahrenheit_to_celsius(cool_f)
        heat_c = fahrenheit_to_celsius(heat_f)

        total_flow = 0.0
        for i, z in enumerate(zones):
            overheat = z.t_zone_c - cool_c
            flow = cfg.flow_min_kg_s + cfg.flow_kp_kg_s_per_k * max(overheat, 0.0)
            flow = min(flow, cfg.flow_max_kg_s)
            q_cool = -flow * CP_AIR * max(z.t_zone_c - t_supply_c, 0.0)
            q_heat = min(cfg.reheat_kp_kw_per_k * max(heat_c - z.t_zone_c, 0.0), cfg.reheat_max_kw)
            gain = z.occupied_gain_kw if occ else cfg.base_gain_kw
            t_next = rc_step(z.t_zone_c, t_out_c, q_cool + q_heat, gain, cfg.step_seconds, z.rc)
            z.t_zone_c = t_next + process_rngs[i].normal(0.0, z.rc.noise_std_c)
            total_flow += flow

            temp_meas_f = celsius_to_fahrenheit(z.t_zone_c) + meas_rngs[i].normal(
                0.0, cfg.zone_temp_noise_f
            )
            flow_meas = max(flow + flow_rngs[i].normal(0.0, cfg.flow_noise_kg_s), 0.0)
            d = z.device_id
            append(f"{stamp},{d},zone_air_temperature_sensor,{temp_meas_f:.4f}")
            append(f"{stamp},{d},zone_air_cooling_setpoint,{cool_f:.4f}")
            append(f"{stamp},{d},zone_air_heating_setpoint,{heat_f:.4f}")
            append(f"{stamp},{d},supply_air_flowrate_sensor,{flow_meas:.5f}")
            append(f"{stamp},{d},supply_air_flowrate_setpoint,{flow:.5f}")

        pressure = cfg.pressure_base_pa + cfg.pressure_span_pa * (total_flow / total_flow_max)
        append(f"{stamp},ahu_01,supply_air_pressure_setpoint,{pressure:.3f}")
        append(f"{stamp},ahu_01,supply_air_temperature_setpoint,{cfg.supply_air_temp_f:.4f}")
        append(f"{stamp},ahu_01,supply_water_temperature_setpoint,{cfg.supply_water_temp_f:.4f}")
        out_meas_f = celsius_to_fahrenheit(t_out_c) + weather_meas_rng.normal(
            0.0, cfg.outside_temp_noise_f
        )
        append(f"{stamp},weather_01,outside_air_temperature_sensor,{out_meas_f:.4f}")

    telemetry_path = out / TELEMETRY_FILE
    telemetry_path.write_text("\n".join(lines) + "\n")

    meta_lines = ["device_id,name,namespace,device_type,zone_id,floor,x,y"]
    for i, z in enumerate(zones):
        floor = 1 + i // 10
        meta_lines.append(
            f"{z.device_id},VAV {i + 1:02d},building/floor{floor},VAV,{z.zone_id},"
            f"{floor},{(i % 5) * 10.0},{(i // 5) * 10.0}"
        )
    meta_lines.append("ahu_01,AHU 01,building/plant,AHU,,0,0.0,0.0")
    meta_lines.append("weather_01,Weather Station,site,WEATHER,,0,0.0,0.0")
    meta_path = out / DEVICE_META_FILE
    meta_path.write_text("\n".join(meta_lines) + "\n")
    return {"telemetry": str(telemetry_path), "device_meta": str(meta_path)}

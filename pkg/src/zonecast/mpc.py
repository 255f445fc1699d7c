"""Tariff-aware setpoint optimization over the plant model.

Decision variables are hourly AHU setpoints: supply air temperature (degC)
and duct pressure differential (Pa), both box-bounded. The objective rolls
the RC zones plus the chiller/fan power chain over the horizon and sums

    energy cost  +  comfort penalty  +  smoothness penalty,

where cost is tariff-weighted (chiller + fan) energy, comfort is the squared
exceedance of each zone's hourly mean temperature beyond a band around the
comfort center, and smoothness is the squared hour-to-hour control change in
box-normalized units. The composed rollout is not convex (trees, clamps), so
the optimizer is derivative-free cyclic coordinate descent with a coarse-scan
plus golden-section line search and three multi-starts; an exhaustive grid
oracle verifies it on small instances.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .plant import (
    CopMode,
    PlantParams,
    RcZoneParams,
    ahu_fan_power,
    chiller_power,
    cop,
    rc_step,
    supply_temp_from_balance,
)
from .series import format_rfc3339, parse_rfc3339

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class TariffSchedule:
    """Hourly price signal in $/kWh."""

    prices: np.ndarray
    start_epoch: int = 0
    step_seconds: int = 3600

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=np.float64)
        if prices.ndim != 1 or prices.size == 0:
            raise ValueError("prices must be a non-empty vector")
        if (prices < 0).any() or not np.isfinite(prices).all():
            raise ValueError("prices must be finite and non-negative")
        if self.step_seconds != 3600:
            raise ValueError("tariff step must be 3600 s")
        self.prices = prices

    def __len__(self) -> int:
        return self.prices.size


@dataclass
class ControlTrajectory:
    supply_temp_c: np.ndarray
    pressure_pa: np.ndarray

    def __post_init__(self):
        self.supply_temp_c = np.asarray(self.supply_temp_c, dtype=np.float64)
        self.pressure_pa = np.asarray(self.pressure_pa, dtype=np.float64)
        if self.supply_temp_c.shape != self.pressure_pa.shape:
            raise ValueError("setpoint sequences must have equal length")

    def __len__(self) -> int:
        return self.supply_temp_c.size

    def copy(self) -> "ControlTrajectory":
        return ControlTrajectory(self.supply_temp_c.copy(), self.pressure_pa.copy())


@dataclass
class MpcConfig:
    horizon_hours: int = 24
    comfort_center_c: float = 22.5
    comfort_band_c: float = 1.5
    comfort_weight: float = 25.0
    smooth_weight: float = 0.05
    supply_temp_bounds: tuple = (10.0, 18.0)
    pressure_bounds: tuple = (100.0, 600.0)
    inner_step_seconds: int = 300
    rollout_substep_seconds: int = 900
    max_sweeps: int = 50
    sweep_tol: float = 1e-6
    accept_tol: float = 1e-9

    def __post_init__(self):
        if self.horizon_hours < 1:
            raise ValueError("horizon must be >= 1 hour")
        if self.comfort_band_c <= 0:
            raise ValueError("comfort band must be positive")
        if self.comfort_weight < 0 or self.smooth_weight < 0:
            raise ValueError("weights must be non-negative")


@dataclass
class MpcZone:
    """One VAV-served zone inside the optimization plant."""

    rc: RcZoneParams
    cool_setpoint_c: float = 22.5
    flow_min_kg_s: float = 0.15
    flow_max_kg_s: float = 2.0
    flow_kp_kg_s_per_k: float = 0.8
    internal_gain_profile_kw: tuple = (0.5,) * 24  # by hour of day

    def gain_at_hour(self, absolute_hour: int) -> float:
        return float(self.internal_gain_profile_kw[absolute_hour % 24])


@dataclass
class MpcPlant:
    params: PlantParams
    zones: list
    outside_temp_c: np.ndarray  # hourly, absolute-hour indexed
    return_water_temp_c: float = 12.0
    pressure_design_pa: float = 400.0

    def __post_init__(self):
        self.outside_temp_c = np.asarray(self.outside_temp_c, dtype=np.float64)


@dataclass
class MpcState:
    zone_temps_c: np.ndarray
    prev_supply_temp_c: float
    prev_pressure_pa: float
    hour: int = 0  # absolute index into tariff / weather arrays

    def __post_init__(self):
        self.zone_temps_c = np.asarray(self.zone_temps_c, dtype=np.float64)


@dataclass
class HourRecord:
    hour: int
    supply_temp_c: float
    pressure_pa: float
    zone_mean_temps_c: np.ndarray  # hourly mean per zone
    p_chiller_kw: float
    p_fan_kw: float
    price: float
    cost: float
    supply_water_temp_c: float


def _roll(
    plant: MpcPlant,
    zone_temps,
    hour0: int,
    supply_temp_seq,
    pressure_seq,
    dt_s: int,
    predictor=None,
):
    """Tight rollout core: returns (q_supply_avg[h], p_fan[h],
    zone_hour_means[h][z], final_temps). All hot-path work stays in plain
    floats; this runs tens of thousands of times inside the optimizer.

    ``predictor`` optionally supplies the zone temperature estimate the VAV
    flow controller reacts to (the short-step forecast model); without it the
    controller is reactive on the current temperature.
    """
    n_hours = len(supply_temp_seq)
    n_sub = 3600 // dt_s
    if n_sub * dt_s != 3600:
        raise ValueError("substep must divide one hour")
    p = plant.params
    cp_air = p.cp_air
    zones = plant.zones
    nz = len(zones)
    temps = [float(t) for t in zone_temps]
    # per-zone constants; Euler stability checked once, not per substep
    z_flow_min = [z.flow_min_kg_s for z in zones]
    z_flow_max = [z.flow_max_kg_s for z in zones]
    z_kp = [z.flow_kp_kg_s_per_k for z in zones]
    z_sp = [z.cool_setpoint_c for z in zones]
    z_dt_c = [dt_s / z.rc.capacitance_kj_per_k for z in zones]
    z_ua = [z.rc.conductance_kw_per_k for z in zones]
    for z in zones:
        if z.rc.conductance_kw_per_k > 0 and dt_s * z.rc.conductance_kw_per_k / z.rc.capacitance_kj_per_k >= 1.0:
            raise ValueError("explicit Euler unstable at the rollout substep")
    q_supply_avg = [0.0] * n_hours
    p_fan_seq = [0.0] * n_hours
    hour_means = [[0.0] * nz for _ in range(n_hours)]
    inv_sub = 1.0 / n_sub
    for h in range(n_hours):
        hour = hour0 + h
        u_t = float(supply_temp_seq[h])
        u_p = float(pressure_seq[h])
        t_out = float(plant.outside_temp_c[hour])
        p_fan_seq[h] = p.fan_coeff_kw_per_pa * u_p
        cap_frac = min(max(u_p / plant.pressure_design_pa, 0.0), 1.0)
        gains = [z.gain_at_hour(hour) for z in zones]
        q_sum = 0.0
        means = hour_means[h]
        for _ in range(n_sub):
            for i in range(nz):
                t_now = temps[i]
                gain = gains[i]
                t_ctrl = t_now if predictor is None else predictor(i, t_now, t_out, gain, dt_s)
                overheat = t_ctrl - z_sp[i]
                desired = z_flow_min[i] + z_kp[i] * overheat if overheat > 0.0 else z_flow_min[i]
                cap = z_flow_max[i] * cap_frac
                flow = desired if desired < cap else cap
                dt_cool = t_now - u_t
                q_cool = flow * cp_air * dt_cool if dt_cool > 0.0 else 0.0
                t_next = t_now + z_dt_c[i] * (z_ua[i] * (t_out - t_now) + gain - q_cool)
                temps[i] = t_next
                means[i] += t_next
                q_sum += q_cool
        for i in range(nz):
            means[i] *= inv_sub
        q_supply_avg[h] = q_sum * inv_sub
    return q_supply_avg, p_fan_seq, hour_means, temps


def _simulate_span(
    plant: MpcPlant,
    zone_temps: np.ndarray,
    hour0: int,
    supply_temp_seq,
    pressure_seq,
    tariff: TariffSchedule,
    dt_s: int,
    predictor=None,
) -> tuple[list[HourRecord], np.ndarray]:
    """Roll the plant hour by hour; returns (per-hour records, final temps)."""
    q_supply, p_fan_seq, hour_means, temps = _roll(
        plant, zone_temps, hour0, supply_temp_seq, pressure_seq, dt_s, predictor
    )
    p = plant.params
    records = []
    for h in range(len(supply_temp_seq)):
        hour = hour0 + h
        t_out = float(plant.outside_temp_c[hour])
        p_chiller = chiller_power(q_supply[h], cop(t_out, p))
        price = float(tariff.prices[hour])
        records.append(
            HourRecord(
                hour=hour,
                supply_temp_c=float(supply_temp_seq[h]),
                pressure_pa=float(pressure_seq[h]),
                zone_mean_temps_c=np.asarray(hour_means[h]),
                p_chiller_kw=p_chiller,
                p_fan_kw=p_fan_seq[h],
                price=price,
                cost=price * (p_chiller + p_fan_seq[h]),
                supply_water_temp_c=supply_temp_from_balance(
                    q_supply[h], plant.return_water_temp_c, p
                ),
            )
        )
    return records, np.asarray(temps)


def _check_bounds(u: ControlTrajectory, cfg: MpcConfig) -> None:
    t_lo, t_hi = cfg.supply_temp_bounds
    p_lo, p_hi = cfg.pressure_bounds
    if not np.isfinite(u.supply_temp_c).all() or not np.isfinite(u.pressure_pa).all():
        raise ValueError("trajectory contains non-finite setpoints")
    if (u.supply_temp_c < t_lo).any() or (u.supply_temp_c > t_hi).any():
        raise ValueError(f"supply temperature setpoint outside [{t_lo}, {t_hi}]")
    if (u.pressure_pa < p_lo).any() or (u.pressure_pa > p_hi).any():
        raise ValueError(f"pressure setpoint outside [{p_lo}, {p_hi}]")


def objective_components(
    u: ControlTrajectory,
    state: MpcState,
    plant: MpcPlant,
    tariff: TariffSchedule,
    cfg: MpcConfig,
) -> tuple[float, float, float]:
    """(cost, comfort, smoothness) terms of the objective."""
    _check_bounds(u, cfg)
    n = len(u)
    if state.hour + n > len(tariff):
        raise ValueError(f"tariff covers {len(tariff)} hours; need {state.hour + n}")
    if state.hour + n > plant.outside_temp_c.size:
        raise ValueError("weather series shorter than the rollout horizon")
    q_supply, p_fan_seq, hour_means, _ = _roll(
        plant,
        state.zone_temps_c,
        state.hour,
        u.supply_temp_c,
        u.pressure_pa,
        cfg.rollout_substep_seconds,
    )
    p = plant.params
    prices = tariff.prices
    center, delta = cfg.comfort_center_c, cfg.comfort_band_c
    cost = 0.0
    comfort = 0.0
    for h in range(n):
        hour = state.hour + h
        p_ch = chiller_power(q_supply[h], cop(float(plant.outside_temp_c[hour]), p))
        cost += float(prices[hour]) * (p_ch + p_fan_seq[h])
        means = hour_means[h]
        acc = 0.0
        for t in means:
            exceed = abs(t - center) - delta
            if exceed > 0.0:
                acc += exceed * exceed
        comfort += acc / len(means)
    comfort *= cfg.comfort_weight
    w_t = cfg.supply_temp_bounds[1] - cfg.supply_temp_bounds[0]
    w_p = cfg.pressure_bounds[1] - cfg.pressure_bounds[0]
    prev_t, prev_p = state.prev_supply_temp_c, state.prev_pressure_pa
    smooth = 0.0
    for h in range(n):
        smooth += ((u.supply_temp_c[h] - prev_t) / w_t) ** 2
        smooth += ((u.pressure_pa[h] - prev_p) / w_p) ** 2
        prev_t, prev_p = u.supply_temp_c[h], u.pressure_pa[h]
    smooth *= cfg.smooth_weight
    return cost, comfort, smooth


def objective(u, state, plant, tariff, cfg) -> float:
    return sum(objective_components(u, state, plant, tariff, cfg))


def grid_oracle(
    state: MpcState,
    plant: MpcPlant,
    tariff: TariffSchedule,
    cfg: MpcConfig,
    grid,
) -> ControlTrajectory:
    """Exact argmin over a small per-hour candidate set by full enumeration.

    Candidates are (supply_temp_c, pressure_pa) pairs; ties go to the
    lexicographically smallest trajectory (pairs enumerated in sorted order,
    strictly better objective required to switch)."""
    points = sorted((float(t), float(p)) for t, p in grid)
    n = cfg.horizon_hours
    combos = len(points) ** n
    if combos > 1_000_000:
        raise ValueError(f"grid too large: {combos} combinations")
    best_u = None
    best_j = math.inf
    for combo in itertools.product(points, repeat=n):
        u = ControlTrajectory(
            np.array([c[0] for c in combo]), np.array([c[1] for c in combo])
        )
        j = objective(u, state, plant, tariff, cfg)
        if j < best_j:
            best_j = j
            best_u = u
    return best_u


def _golden_section(f, lo: float, hi: float, tol: float, max_iter: int = 16):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while (b - a) > tol and it < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        it += 1
    return (c, fc) if fc < fd else (d, fd)


class _SweepEvaluator:
    """Objective evaluation specialized for coordinate descent.

    Hours before the active coordinate are unaffected by it, so their rollout
    (zone temps, cost, comfort) is cached once per coordinate and only the
    suffix re-rolls per line-search probe. Smoothness is cheap and recomputed
    whole."""

    def __init__(self, u: ControlTrajectory, state, plant, tariff, cfg):
        self.u = u
        self.state = state
        self.plant = plant
        self.tariff = tariff
        self.cfg = cfg
        self._h = None
        self._prefix_cost = 0.0
        self._prefix_comfort = 0.0
        self._temps_at_h = None

    def _span_terms(self, temps, hour0, u_t_seq, u_p_seq):
        cfg, plant = self.cfg, self.plant
        q_supply, p_fan_seq, hour_means, end_temps = _roll(
            plant, temps, hour0, u_t_seq, u_p_seq, cfg.rollout_substep_seconds
        )
        p = plant.params
        prices = self.tariff.prices
        center, delta = cfg.comfort_center_c, cfg.comfort_band_c
        cost = 0.0
        comfort = 0.0
        for h in range(len(u_t_seq)):
            hour = hour0 + h
            p_ch = chiller_power(q_supply[h], cop(float(plant.outside_temp_c[hour]), p))
            cost += float(prices[hour]) * (p_ch + p_fan_seq[h])
            means = hour_means[h]
            acc = 0.0
            for t in means:
                exceed = abs(t - center) - delta
                if exceed > 0.0:
                    acc += exceed * exceed
            comfort += acc / len(means)
        return cost, cfg.comfort_weight * comfort, end_temps

    def _smooth(self) -> float:
        cfg, u = self.cfg, self.u
        w_t = cfg.supply_temp_bounds[1] - cfg.supply_temp_bounds[0]
        w_p = cfg.pressure_bounds[1] - cfg.pressure_bounds[0]
        prev_t, prev_p = self.state.prev_supply_temp_c, self.state.prev_pressure_pa
        smooth = 0.0
        for h in range(len(u)):
            smooth += ((u.supply_temp_c[h] - prev_t) / w_t) ** 2
            smooth += ((u.pressure_pa[h] - prev_p) / w_p) ** 2
            prev_t, prev_p = u.supply_temp_c[h], u.pressure_pa[h]
        return cfg.smooth_weight * smooth

    def prepare(self, h: int) -> None:
        self._h = h
        self._prefix_cost, self._prefix_comfort, self._temps_at_h = self._span_terms(
            self.state.zone_temps_c, self.state.hour, self.u.supply_temp_c[:h], self.u.pressure_pa[:h]
        )

    def eval_coord(self, coord: int, value: float) -> float:
        h = self._h
        arr = self.u.supply_temp_c if coord == 0 else self.u.pressure_pa
        saved = arr[h]
        arr[h] = value
        cost, comfort, _ = self._span_terms(
            self._temps_at_h, self.state.hour + h, self.u.supply_temp_c[h:], self.u.pressure_pa[h:]
        )
        j = self._prefix_cost + self._prefix_comfort + cost + comfort + self._smooth()
        arr[h] = saved
        return j


def _tariff_aware_start(tariff, state, cfg) -> ControlTrajectory:
    """Heuristic: precool (cold supply, mid pressure) in cheap hours, coast
    (warm supply, low pressure) in expensive ones."""
    n = cfg.horizon_hours
    prices = tariff.prices[state.hour : state.hour + n]
    med = float(np.median(prices))
    t_lo, t_hi = cfg.supply_temp_bounds
    p_lo, p_hi = cfg.pressure_bounds
    u_t = np.where(prices > med, t_hi, t_lo)
    u_p = np.where(prices > med, p_lo, 0.5 * (p_lo + p_hi))
    return ControlTrajectory(u_t.astype(float), u_p.astype(float))


def optimize(
    state: MpcState,
    plant: MpcPlant,
    tariff: TariffSchedule,
    cfg: MpcConfig,
) -> ControlTrajectory:
    """Projected cyclic coordinate descent with multi-start.

    Each scalar coordinate gets a 7-point coarse scan of its box followed by a
    golden-section refinement around the best scan point; moves are accepted
    only on strict improvement, so the result never exceeds any start's
    objective."""
    n = cfg.horizon_hours
    t_lo, t_hi = cfg.supply_temp_bounds
    p_lo, p_hi = cfg.pressure_bounds
    starts = [
        ControlTrajectory(np.full(n, 0.5 * (t_lo + t_hi)), np.full(n, 0.5 * (p_lo + p_hi))),
        ControlTrajectory(np.full(n, t_lo), np.full(n, p_lo)),
        _tariff_aware_start(tariff, state, cfg),
    ]
    bounds = (cfg.supply_temp_bounds, cfg.pressure_bounds)
    best_u, best_j = None, math.inf
    for start in starts:
        u = start.copy()
        arrays = (u.supply_temp_c, u.pressure_pa)
        j = objective(u, state, plant, tariff, cfg)
        ev = _SweepEvaluator(u, state, plant, tariff, cfg)
        for _ in range(cfg.max_sweeps):
            j_sweep_start = j
            for h in range(n):
                ev.prepare(h)
                for coord in (0, 1):
                    lo, hi = bounds[coord]
                    span = hi - lo
                    scan = [lo + span * k / 6.0 for k in range(7)]
                    scan_j = [ev.eval_coord(coord, v) for v in scan]
                    k_best = int(np.argmin(scan_j))
                    g_lo = max(lo, scan[k_best] - span / 6.0)
                    g_hi = min(hi, scan[k_best] + span / 6.0)
                    cand, cand_j = _golden_section(
                        lambda v: ev.eval_coord(coord, v), g_lo, g_hi, tol=span * 3e-4, max_iter=14
                    )
                    if scan_j[k_best] < cand_j:
                        cand, cand_j = scan[k_best], scan_j[k_best]
                    if cand_j < j - cfg.accept_tol:
                        arrays[coord][h] = cand
                        j = cand_j
            if j_sweep_start - j < cfg.sweep_tol:
                break
        if j < best_j:
            best_j = j
            best_u = u
    return best_u


# ---------------------------------------------------------------------------
# receding horizon

@dataclass
class MpcTrace:
    rows: list = field(default_factory=list)  # HourRecord
    zone_hour_means_c: list = field(default_factory=list)  # per hour: ndarray per zone

    @property
    def total_cost(self) -> float:
        return float(sum(r.cost for r in self.rows))

    def total_energy_kwh(self, hours=None) -> float:
        rows = self.rows if hours is None else [r for r in self.rows if r.hour in hours]
        return float(sum(r.p_chiller_kw + r.p_fan_kw for r in rows))

    def violation_hours(self, cfg: MpcConfig) -> int:
        lo = cfg.comfort_center_c - cfg.comfort_band_c
        hi = cfg.comfort_center_c + cfg.comfort_band_c
        count = 0
        for means in self.zone_hour_means_c:
            if (means < lo).any() or (means > hi).any():
                count += 1
        return count


def receding_horizon(
    state: MpcState,
    plant: MpcPlant,
    tariff: TariffSchedule,
    cfg: MpcConfig,
    total_hours: int,
    predictor=None,
) -> MpcTrace:
    """Hourly loop: optimize over the horizon, apply the first setpoints, then
    simulate the hour at the fine VAV step and advance."""
    if total_hours < 1:
        raise ValueError("total_hours must be >= 1")
    needed = state.hour + total_hours - 1 + cfg.horizon_hours
    if len(tariff) < needed:
        raise ValueError(f"tariff covers {len(tariff)} hours; receding run needs {needed}")
    if plant.outside_temp_c.size < needed:
        raise ValueError("weather series too short for the receding run")
    st = MpcState(
        zone_temps_c=state.zone_temps_c.copy(),
        prev_supply_temp_c=state.prev_supply_temp_c,
        prev_pressure_pa=state.prev_pressure_pa,
        hour=state.hour,
    )
    trace = MpcTrace()
    for _ in range(total_hours):
        u = optimize(st, plant, tariff, cfg)
        records, temps = _simulate_span(
            plant,
            st.zone_temps_c,
            st.hour,
            u.supply_temp_c[:1],
            u.pressure_pa[:1],
            tariff,
            cfg.inner_step_seconds,
            predictor=predictor,
        )
        rec = records[0]
        trace.rows.append(rec)
        trace.zone_hour_means_c.append(rec.zone_mean_temps_c)
        st.zone_temps_c = temps
        st.prev_supply_temp_c = float(u.supply_temp_c[0])
        st.prev_pressure_pa = float(u.pressure_pa[0])
        st.hour += 1
    return trace


def simulate_constant(
    state: MpcState,
    plant: MpcPlant,
    tariff: TariffSchedule,
    cfg: MpcConfig,
    total_hours: int,
    supply_temp_c: float,
    pressure_pa: float,
    predictor=None,
) -> MpcTrace:
    """Fixed-setpoint run with the same inner-step simulation as the MPC."""
    records, _ = _simulate_span(
        plant,
        state.zone_temps_c,
        state.hour,
        np.full(total_hours, supply_temp_c),
        np.full(total_hours, pressure_pa),
        tariff,
        cfg.inner_step_seconds,
        predictor=predictor,
    )
    trace = MpcTrace()
    for rec in records:
        trace.rows.append(rec)
        trace.zone_hour_means_c.append(rec.zone_mean_temps_c)
    return trace


def best_constant_baseline(
    state: MpcState,
    plant: MpcPlant,
    tariff: TariffSchedule,
    cfg: MpcConfig,
    total_hours: int,
    n_levels: int = 5,
) -> tuple[tuple[float, float], MpcTrace]:
    """Best constant-setpoint run on an n_levels x n_levels box grid.

    Feasibility first: candidates are ranked by comfort-violation hours, then
    by cost, so a cheap-but-uncomfortable constant cannot win."""
    t_lo, t_hi = cfg.supply_temp_bounds
    p_lo, p_hi = cfg.pressure_bounds
    best = None
    for u_t in np.linspace(t_lo, t_hi, n_levels):
        for u_p in np.linspace(p_lo, p_hi, n_levels):
            trace = simulate_constant(state, plant, tariff, cfg, total_hours, u_t, u_p)
            key = (trace.violation_hours(cfg), trace.total_cost)
            if best is None or key < best[0]:
                best = (key, (float(u_t), float(u_p)), trace)
    return best[1], best[2]


def make_rc_predictor(plant: MpcPlant):
    """One-step free-response forecast per zone: what the short-step zone
    model expects the temperature to drift to with no mechanical cooling."""

    def predictor(i, t_zone_c, t_out_c, gain_kw, dt_s):
        return rc_step(t_zone_c, t_out_c, 0.0, gain_kw, dt_s, plant.zones[i].rc)

    return predictor


# ---------------------------------------------------------------------------
# file surfaces

def write_mpc_trace_csv(trace: MpcTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["hour", "u_supply_temp_c", "u_pressure_pa", "t_zone_c", "p_chiller_kw", "p_fan_kw", "price", "cost"]
        )
        for r in trace.rows:
            w.writerow(
                [
                    r.hour,
                    repr(r.supply_temp_c),
                    repr(r.pressure_pa),
                    repr(float(r.zone_mean_temps_c.mean())),
                    repr(r.p_chiller_kw),
                    repr(r.p_fan_kw),
                    repr(r.price),
                    repr(r.cost),
                ]
            )


def write_tariff_csv(tariff: TariffSchedule, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hour_start_rfc3339", "price_per_kwh"])
        for h in range(len(tariff)):
            w.writerow([format_rfc3339(tariff.start_epoch + h * 3600), repr(float(tariff.prices[h]))])


def load_tariff_csv(path) -> TariffSchedule:
    path = Path(path)
    prices = []
    start_epoch = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["hour_start_rfc3339", "price_per_kwh"]:
            raise ValueError(f"{path}: expected header 'hour_start_rfc3339,price_per_kwh'")
        for i, row in enumerate(reader):
            ts = parse_rfc3339(row[0])
            if i == 0:
                start_epoch = ts
            elif ts != start_epoch + i * 3600:
                raise ValueError(f"{path}: tariff rows must be consecutive hours")
            prices.append(float(row[1]))
    return TariffSchedule(prices=np.asarray(prices), start_epoch=start_epoch)


def make_spike_tariff(
    n_hours: int,
    base_price: float = 0.10,
    spike_multiplier: float = 2.0,
    spike_hours=range(12, 18),
    start_epoch: int = 0,
) -> TariffSchedule:
    """Daily pattern with a midday price spike, tiled over n_hours."""
    spike = set(spike_hours)
    prices = np.array(
        [base_price * (spike_multiplier if h % 24 in spike else 1.0) for h in range(n_hours)]
    )
    return TariffSchedule(prices=prices, start_epoch=start_epoch)

import numpy as np
import pytest

from zonecast.series import MeasurementKind, TimeSeries, ZoneFrame


def make_series(values, kind=MeasurementKind.ZONE_AIR_TEMPERATURE_SENSOR, step=300, start=0, device="dev"):
    return TimeSeries(device, kind, step, start, np.asarray(values, dtype=float))


def make_frame(target, outside=None, cool=None, heat=None, flow=None, step=900, start=0, zone="zone_a", extra=None):
    """Frame with the five required channels; constant defaults where not given."""
    target = np.asarray(target, dtype=float)
    n = target.size
    chans = {
        MeasurementKind.ZONE_AIR_TEMPERATURE_SENSOR: target,
        MeasurementKind.ZONE_AIR_COOLING_SETPOINT: np.full(n, 72.0) if cool is None else np.asarray(cool, float),
        MeasurementKind.ZONE_AIR_HEATING_SETPOINT: np.full(n, 68.0) if heat is None else np.asarray(heat, float),
        MeasurementKind.SUPPLY_AIR_FLOWRATE_SENSOR: np.full(n, 0.5) if flow is None else np.asarray(flow, float),
        MeasurementKind.OUTSIDE_AIR_TEMPERATURE_SENSOR: np.full(n, 60.0) if outside is None else np.asarray(outside, float),
    }
    if extra:
        chans.update(extra)
    return ZoneFrame(zone_id=zone, step_seconds=step, start=start, channels=chans)


@pytest.fixture
def frame_ar1():
    """AR(1)-ish frame long enough for small lookbacks and horizons."""
    rng = np.random.default_rng(1234)
    n = 400
    y = np.empty(n)
    y[0] = 70.0
    for t in range(1, n):
        y[t] = 70.0 + 0.9 * (y[t - 1] - 70.0) + rng.normal(0, 0.3)
    outside = 60.0 + 10.0 * np.sin(np.arange(n) / 20.0)
    return make_frame(y, outside=outside)

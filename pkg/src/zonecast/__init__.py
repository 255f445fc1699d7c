"""zonecast: indoor zone temperature forecasting and tariff-aware HVAC
setpoint optimization on building telemetry."""

__version__ = "0.1.0"

"""Beacon-flooding simulation"""

from .models import MetricSample, ReceiverSummary, SimConfig, SimMetrics
from .presets import DOS_CALIBRATIONS, PRESETS, dos_calibration, preset_config
from .simnet import (
    baseline_scenario, dos_magnitude, export_metrics, fourteen_day_bytes, run_scenario,
)

__all__ = [
    'MetricSample', 'ReceiverSummary', 'SimConfig', 'SimMetrics', 'DOS_CALIBRATIONS', 'PRESETS',
    'dos_calibration', 'preset_config',
    'baseline_scenario', 'dos_magnitude', 'export_metrics', 'fourteen_day_bytes', 'run_scenario',
]
